#ifndef ARW_FLOW_HPP
#define ARW_FLOW_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "arw/core.hpp"
#include "arw/stats.hpp"

namespace arw::flow {

/// s[k] = sum over i = -k..0 of (eta(i) - 1), for k = 0..n.
struct ProfileWalk {
    std::vector<std::int64_t> s;
};

/// Throws std::invalid_argument unless the window of `config` covers [-n, 0].
[[nodiscard]] ProfileWalk profile_walk(const Configuration& config, std::int64_t n);

/// max(0, max over k <= n of s[k]).
[[nodiscard]] std::int64_t flux_oracle_discrete(const ProfileWalk& profile, std::int64_t n);

/// Number of particles leaving [-n, 0] to the right when the totally
/// asymmetric particle-hole model is run to absorption by the toppling
/// engine. `config` is the t = 0- configuration on [-n, 0].
[[nodiscard]] std::uint64_t absorbed_flux(const Configuration& config);

/// Crossing times of the origin. Each particle is counted the first time it
/// jumps from site -1 to site 0, so C is the number of distinct particles
/// that have entered [0, inf) from the left.
struct FlowTrace {
    std::vector<double> times;              ///< nondecreasing
    std::uint64_t directed_crossings = 0;   ///< every -1 -> 0 jump, repeats included

    /// C(t) = #{i : times[i] <= t}.
    [[nodiscard]] std::uint64_t count(double t) const;
    [[nodiscard]] std::uint64_t total() const noexcept { return times.size(); }
};

struct FlowWindow {
    std::int64_t left = 0;    ///< W: sites -W..R are simulated
    std::int64_t right = 0;   ///< R
};

/// W = ceil(v T + 8 sqrt(T)): a particle starting at -W reaches the origin
/// by time T only on an 8-standard-deviation excursion of its jump count.
/// R = max(16, ceil(30 ln 10 / ln(p / q))): a particle starting right of R
/// reaches the origin with probability below 1e-30.
[[nodiscard]] FlowWindow default_window(double p, double horizon);

/// True when W leaves less than 5 standard deviations of margin.
[[nodiscard]] bool window_too_small(const FlowWindow& window, double p, double horizon);

/// Particle-hole: one particle per filled site is settled for good.
/// ArwInfiniteSleep: ARW with lambda = inf, where a lone particle sleeps at
/// once and is woken when another particle lands on it.
enum class FlowModel { ParticleHole, ArwInfiniteSleep };

[[nodiscard]] std::string_view to_string(FlowModel m);

struct FlowRun {
    FlowTrace trace;
    FlowWindow window;
    std::uint64_t events = 0;
    std::uint64_t crossings_from_right = 0;   ///< counted crossings by particles that started at x >= 0
    bool window_warning = false;
};

/// Continuous-time particle-hole model on [-W, R], jump rate 1, right with
/// probability p. Initial counts are drawn per site as in sample_initial, so
/// a site's count does not depend on the window. Runs until `horizon` or
/// absorption (horizon may be infinite). Particles leaving the window are
/// removed.
FlowRun measure_flow(double p, const InitialLaw& law, const FlowWindow& window, double horizon,
                     const SeedSpec& seed, FlowModel model = FlowModel::ParticleHole);

/// n samples of the running maximum of a standard Brownian motion at time t,
/// distributed as |B_t| by the reflection principle.
[[nodiscard]] std::vector<double> bm_max_reference(double t, std::size_t n, const SeedSpec& seed);

// ++ Scaling campaign ++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct ScalingCell {
    std::int64_t L = 0;
    double t = 0.0;
    double ks = 0.0;
    double mean = 0.0;            ///< of C / (sigma L)
    double expected_mean = 0.0;   ///< sqrt(2 t / pi)
    std::vector<double> samples;  ///< C / (sigma L), in run order
};

struct ScalingOptions {
    std::size_t runs = 2000;
    double ks_threshold = 0.1;
    double mean_tolerance = 0.1;   ///< relative, at the largest L
    int workers = 1;
    FlowModel model = FlowModel::ParticleHole;
};

struct ScalingReport {
    double p = 0.0;
    double v = 0.0;
    double sigma = 0.0;
    std::vector<std::int64_t> ladder;
    std::vector<double> times;
    std::vector<ScalingCell> cells;   ///< ladder-major
    bool ks_decreasing = true;        ///< strictly, for every t
    bool final_below_threshold = true;
    bool mean_ok = true;
    bool monotone_in_t = true;        ///< per run, C nondecreasing across times
    bool window_warning = false;
    bool pass = false;                ///< ks_decreasing && final_below_threshold

    [[nodiscard]] const ScalingCell& cell(std::size_t level, std::size_t time) const
    {
        return cells.at(level * times.size() + time);
    }
};

/// Checks the preconditions and throws std::invalid_argument naming the
/// violated hypothesis.
void validate_scaling_inputs(double p, const InitialLaw& law, std::size_t runs);

/// For each L and t, the law of C at time L^2 t / v over `runs` runs,
/// rescaled by sigma L and compared with the half-normal of scale sqrt(t).
/// Run r at level L uses seed.child(L).with_run(r).
[[nodiscard]] ScalingReport verify_scaling(double p, const InitialLaw& law, const std::vector<double>& times,
                                           const std::vector<std::int64_t>& ladder, const SeedSpec& seed,
                                           const ScalingOptions& options = {});

} // namespace arw::flow

#endif
