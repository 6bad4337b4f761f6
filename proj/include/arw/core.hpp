#ifndef ARW_CORE_HPP
#define ARW_CORE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "arw/rng.hpp"
#include "arw/stats.hpp"

namespace arw {

// ++ Lattice geometry ++++++++++++++++++++++++++++++++++++++++++++++++++++++++

inline constexpr int kMaxDim = 3;

using Coord = std::array<std::int64_t, kMaxDim>;

/// Index of a site inside a Box; kOutside for sites beyond it.
using SiteIndex = std::size_t;
inline constexpr SiteIndex kOutside = std::numeric_limits<SiteIndex>::max();

/// Axis-aligned box of Z^d with inclusive bounds. Unused axes are pinned to 0.
class Box {
public:
    Box() = default;
    Box(int dim, const Coord& lo, const Coord& hi);

    /// [lo, hi] on Z.
    static Box interval(std::int64_t lo, std::int64_t hi);
    /// {-r, ..., r}^dim.
    static Box centered(int dim, std::int64_t radius);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const Coord& lo() const noexcept { return lo_; }
    [[nodiscard]] const Coord& hi() const noexcept { return hi_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::int64_t extent(int axis) const noexcept { return hi_[axis] - lo_[axis] + 1; }

    [[nodiscard]] bool contains(const Coord& c) const noexcept;
    [[nodiscard]] bool contains(const Box& other) const noexcept;

    [[nodiscard]] SiteIndex index_of(const Coord& c) const noexcept;
    [[nodiscard]] Coord coord_of(SiteIndex i) const noexcept;

    /// Site reached from `i` along direction `dir` (see JumpKernel), or kOutside.
    [[nodiscard]] SiteIndex neighbor(SiteIndex i, int dir) const noexcept;

    friend bool operator==(const Box&, const Box&) = default;

private:
    int dim_ = 1;
    Coord lo_{0, 0, 0};
    Coord hi_{0, 0, 0};
    std::array<std::size_t, kMaxDim> stride_{1, 1, 1};
    std::size_t size_ = 1;
};

/// Offset of direction `dir`: 2a is +e_a and 2a+1 is -e_a.
[[nodiscard]] Coord direction_offset(int dir) noexcept;

/// Stable 64-bit key of a lattice site, independent of any window.
[[nodiscard]] std::uint64_t site_key(const Coord& c) noexcept;

// ++ Jump kernel and model parameters ++++++++++++++++++++++++++++++++++++++++

/// Nearest-neighbor jump law p(y). probs[2a] = p(+e_a), probs[2a+1] = p(-e_a).
class JumpKernel {
public:
    JumpKernel(int dim, std::vector<double> probs);

    static JumpKernel symmetric(int dim);
    /// d = 1 kernel with p to the right and q = 1 - p to the left.
    static JumpKernel biased(double p_right);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int directions() const noexcept { return 2 * dim_; }
    [[nodiscard]] double prob(int dir) const { return probs_.at(static_cast<std::size_t>(dir)); }
    [[nodiscard]] const std::vector<double>& probs() const noexcept { return probs_; }

    /// Inverse-CDF choice of a direction from u in [0, 1).
    [[nodiscard]] int pick(double u) const noexcept;

private:
    int dim_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
};

enum class Model { ARW, ParticleHole, Annihilating };

/// How a site-wise toppling acts on a configuration.
enum class Semantics {
    ArwFinite,     ///< ARW with 0 < lambda < inf: Sleep instructions exist.
    ArwInfinite,   ///< ARW with lambda = inf: a lone particle is passive at once.
    ParticleHole,  ///< unsettled particles fill holes; also the annihilating system with D_B = 0.
};

struct ModelParams {
    Model model = Model::ARW;
    double sleep_rate = 1.0;   ///< lambda in (0, inf]; ARW only
    JumpKernel kernel = JumpKernel::symmetric(1);
    double d_b = 0.0;          ///< B-particle jump rate; annihilating only, must be 0

    static ModelParams arw(double lambda, JumpKernel kernel);
    static ModelParams particle_hole(JumpKernel kernel);
    static ModelParams annihilating(JumpKernel kernel, double d_b = 0.0);

    void validate() const;

    [[nodiscard]] bool infinite_sleep_rate() const noexcept;
    [[nodiscard]] Semantics semantics() const noexcept;
    /// Probability that an instruction is Sleep: lambda / (1 + lambda), or 0.
    [[nodiscard]] double sleep_probability() const noexcept;
    /// Toppling clock rate carried by each active particle.
    [[nodiscard]] double clock_rate_per_particle() const noexcept;
};

[[nodiscard]] std::string to_string(Model m);
[[nodiscard]] std::string to_string(Semantics s);
[[nodiscard]] Model parse_model(const std::string& name);

// ++ Site states and configurations ++++++++++++++++++++++++++++++++++++++++++

enum class Marker : std::uint8_t { None, Sleeping, Settled };

/// Per-site state. Tags:
///   Empty       active == 0, marker None
///   Sleeping    active == 0, marker Sleeping   (ARW, lambda < inf)
///   Settled     active == 0, marker Settled    (filled hole / lone passive particle)
///   Active(k)   active == k >= 1; settled flag is marker == Settled
/// Sleeping never coexists with active particles: an arrival wakes it.
struct SiteState {
    enum class Tag { Empty, Sleeping, Settled, Active };

    std::uint32_t active = 0;
    Marker marker = Marker::None;

    [[nodiscard]] Tag tag() const noexcept;
    [[nodiscard]] bool stable() const noexcept { return active == 0; }
    [[nodiscard]] bool settled() const noexcept { return marker == Marker::Settled; }
    [[nodiscard]] std::uint32_t particles() const noexcept
    {
        return active + (marker == Marker::None ? 0U : 1U);
    }

    static SiteState empty() noexcept { return {}; }
    static SiteState sleeping() noexcept { return {0, Marker::Sleeping}; }
    static SiteState settled_site() noexcept { return {0, Marker::Settled}; }
    static SiteState with_active(std::uint32_t k, bool settled_flag = false) noexcept
    {
        return {k, settled_flag ? Marker::Settled : Marker::None};
    }

    friend bool operator==(const SiteState&, const SiteState&) = default;
};

/// Particle configuration over a finite window. Particles that leave the
/// window are removed and tallied per exit direction.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(Box window);

    /// t = 0- configuration: every particle active/unsettled.
    static Configuration from_counts(Box window, const std::vector<std::uint32_t>& counts);

    [[nodiscard]] const Box& window() const noexcept { return window_; }
    [[nodiscard]] std::size_t size() const noexcept { return sites_.size(); }

    [[nodiscard]] SiteState& operator[](SiteIndex i) { return sites_[i]; }
    [[nodiscard]] const SiteState& operator[](SiteIndex i) const { return sites_[i]; }
    [[nodiscard]] const SiteState& at(const Coord& c) const;
    [[nodiscard]] SiteState& at(const Coord& c);

    [[nodiscard]] const std::vector<SiteState>& sites() const noexcept { return sites_; }

    /// Exit tallies, one per direction (d = 1: [0] right, [1] left).
    [[nodiscard]] const std::vector<std::uint64_t>& exited() const noexcept { return exited_; }
    [[nodiscard]] std::uint64_t exited_right() const { return exited_.at(0); }
    [[nodiscard]] std::uint64_t exited_left() const { return exited_.at(1); }
    [[nodiscard]] std::uint64_t exited_total() const noexcept;
    void record_exit(int dir) { ++exited_.at(static_cast<std::size_t>(dir)); }

    /// Particles inside the window (active + sleeping + settled).
    [[nodiscard]] std::uint64_t particles_inside() const noexcept;
    /// Inside plus exited; invariant under every dynamics.
    [[nodiscard]] std::uint64_t total_particles() const noexcept { return particles_inside() + exited_total(); }
    /// Per-site particle counts.
    [[nodiscard]] std::vector<std::uint32_t> counts() const;

    friend bool operator==(const Configuration&, const Configuration&) = default;

private:
    Box window_;
    std::vector<SiteState> sites_;
    std::vector<std::uint64_t> exited_;
};

/// t = 0 transition: in the particle-hole model one particle fills the hole
/// of each occupied site; for the ARW with lambda = inf a lone particle is
/// passive at once. Costs no topplings. Returns the number of particles that
/// became settled. Idempotent.
std::uint64_t apply_initial_settling(Configuration& config, const ModelParams& params);

[[nodiscard]] bool is_stable_at(const Configuration& config, const Coord& x, const ModelParams& params);

struct DensityStats {
    std::size_t sites = 0;
    std::uint64_t active = 0;
    std::uint64_t sleeping = 0;
    std::uint64_t settled = 0;
    std::uint64_t unfilled_holes = 0;

    [[nodiscard]] double active_density() const noexcept { return ratio(active); }
    [[nodiscard]] double sleeping_density() const noexcept { return ratio(sleeping); }
    [[nodiscard]] double settled_density() const noexcept { return ratio(settled); }
    [[nodiscard]] double unfilled_hole_density() const noexcept { return ratio(unfilled_holes); }

private:
    [[nodiscard]] double ratio(std::uint64_t c) const noexcept
    {
        return sites == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(sites);
    }
};

[[nodiscard]] DensityStats density_stats(const Configuration& config);

// ++ Initial laws ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

/// I.i.d. law of the initial particle count per site.
class InitialLaw {
public:
    enum class Kind { Poisson, Geometric, BernoulliMixture, Deterministic };

    static InitialLaw poisson(double mean);
    static InitialLaw geometric(double mean);
    /// `hi` particles with probability `weight`, else `lo`.
    static InitialLaw bernoulli_mixture(int lo, int hi, double weight);
    /// Fixed counts, one per window site (in window index order). For tests.
    static InitialLaw deterministic(std::vector<std::uint32_t> counts);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    /// Analytic variance; 0 for Deterministic.
    [[nodiscard]] double variance() const noexcept { return variance_; }
    [[nodiscard]] const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }
    [[nodiscard]] std::optional<stats::Distribution> distribution() const { return dist_; }

    /// Inverse-CDF draw; not valid for Deterministic.
    [[nodiscard]] std::uint32_t draw(double u) const;
    [[nodiscard]] const std::optional<stats::CountSampler>& sampler() const noexcept { return sampler_; }

    [[nodiscard]] std::string describe() const;

private:
    Kind kind_ = Kind::Poisson;
    double mean_ = 0.0;
    double variance_ = 0.0;
    std::optional<stats::Distribution> dist_;
    std::optional<stats::CountSampler> sampler_;
    std::vector<std::uint32_t> counts_;
};

/// Samples eta_0 over `window`. Site x uses the uniform keyed by (seed, x),
/// so the count at a site does not depend on the window shape. `cap`, when
/// set, clips each count.
[[nodiscard]] Configuration sample_initial(const InitialLaw& law, const Box& window, const SeedSpec& seed,
                                           std::optional<std::uint32_t> cap = std::nullopt);

} // namespace arw

#endif
