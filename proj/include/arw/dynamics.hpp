#ifndef ARW_DYNAMICS_HPP
#define ARW_DYNAMICS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "arw/abelian.hpp"
#include "arw/core.hpp"

namespace arw::dynamics {

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();
inline constexpr std::uint64_t kDefaultEventBudget = 2'000'000'000ULL;

/// Fenwick tree over per-site active counts. Selecting a site proportionally
/// to its count and updating a count both cost O(log n).
class ActiveIndex {
public:
    explicit ActiveIndex(std::size_t n = 0);

    void add(std::size_t i, std::int64_t delta);
    [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
    /// Smallest i with prefix(i) > r, for r < total().
    [[nodiscard]] std::size_t find(std::uint64_t r) const noexcept;

private:
    std::vector<std::uint64_t> tree_;
    std::size_t top_bit_ = 0;
    std::uint64_t total_ = 0;
};

struct ObservableRecord {
    double time = 0.0;
    DensityStats density;
    std::uint64_t settled_particles = 0;   ///< tally of settle events minus wake-ups
    std::uint64_t filled_holes = 0;        ///< sites carrying the Settled marker
    bool probe_active = false;             ///< an active particle in the probe box
    std::uint64_t events = 0;
};

/// Records at strictly increasing times.
struct ObservableSeries {
    std::vector<ObservableRecord> records;
};

struct Event {
    double time = 0.0;
    SiteIndex source = kOutside;
    abelian::ToppleResult topple;
};

/// Continuous-time dynamics driven by the site-wise instruction tape. Every
/// active particle carries a clock of rate clock_rate_per_particle(); when a
/// clock rings its site topples with the next instruction of that site. For
/// the ARW with k >= 2 actives a Sleep instruction is a no-op, so the site
/// jumps at rate k and a lone particle sleeps at rate lambda. Because the
/// tape is shared with the toppling engine, the final odometer equals the
/// stabilizing odometer.
class Simulator {
public:
    /// Takes the t = 0- configuration and applies the t = 0 settling.
    Simulator(Configuration config, const ModelParams& params, const SeedSpec& seed);

    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] std::uint64_t events() const noexcept { return events_; }
    [[nodiscard]] const Configuration& config() const noexcept { return config_; }
    [[nodiscard]] const abelian::Odometer& odometer() const noexcept { return odometer_; }
    [[nodiscard]] const abelian::InstructionTape& tape() const noexcept { return tape_; }
    [[nodiscard]] std::uint64_t settled_particles() const noexcept { return settled_; }
    [[nodiscard]] double total_rate() const noexcept;
    [[nodiscard]] bool absorbed() const noexcept { return index_.total() == 0; }

    /// Per-site event rates of the current configuration.
    [[nodiscard]] std::vector<double> rates() const;
    /// Draws the site of the next event without applying it. Consumes clock
    /// randomness.
    [[nodiscard]] SiteIndex sample_site();

    /// Time of the next event, drawn once and kept until applied; nullopt
    /// when absorbed.
    [[nodiscard]] std::optional<double> next_time();

    /// Applies the next event if it occurs at or before `horizon`; otherwise
    /// advances nothing and returns nullopt. Also nullopt when absorbed.
    std::optional<Event> step(double horizon = kInfiniteHorizon);

    [[nodiscard]] ObservableRecord record(const std::optional<Box>& probe) const;

private:
    void apply(SiteIndex x);

    Configuration config_;
    ModelParams params_;
    abelian::InstructionTape tape_;
    abelian::Odometer odometer_;
    ActiveIndex index_;
    std::mt19937_64 clock_;
    double rate_per_particle_;
    double time_ = 0.0;
    std::uint64_t events_ = 0;
    std::uint64_t settled_ = 0;
    std::optional<double> pending_time_;
};

struct SimulateOptions {
    std::optional<Box> probe;
    double first_sample = 1.0;
    double sample_ratio = 1.3;
    std::uint64_t event_budget = kDefaultEventBudget;
    std::optional<std::uint32_t> cap;   ///< per-site cap on initial counts
    double exit_warning_fraction = 0.01;
};

struct SimulationResult {
    ObservableSeries series;
    Configuration final_config;
    abelian::Odometer odometer;
    bool truncated = false;
    bool absorbed = false;
    std::uint64_t events = 0;
    double end_time = 0.0;
    std::optional<double> last_probe_activity;
    std::vector<std::string> warnings;
};

/// Exact event-driven sampling up to `horizon` (may be infinite: runs until
/// no active particle is left). Records are taken at t = 0 and at
/// first_sample * ratio^k below the horizon, then at the horizon, or at the
/// last event when the horizon is infinite or the budget runs out.
SimulationResult simulate(const ModelParams& params, const InitialLaw& law, const Box& window, double horizon,
                          const SeedSpec& seed, const SimulateOptions& options = {});

/// Same, from an explicit t = 0- configuration.
SimulationResult simulate_from(Configuration initial, const ModelParams& params, double horizon,
                               const SeedSpec& seed, const SimulateOptions& options = {});

// ++ Two-type annihilating walks +++++++++++++++++++++++++++++++++++++++++++++

/// A-particles jump at rate 1 with the kernel; B-particles are static (one
/// per site at t = 0-); an A landing on a B annihilates with it. Written
/// independently of the toppling engine: per-site A counts and B flags, a
/// linear cumulative scan for site selection, and the k-th departure from a
/// site follows instruction k of a tape.
class AnnihilatingSystem {
public:
    AnnihilatingSystem(const Configuration& initial, const ModelParams& params, const SeedSpec& seed);

    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] const std::vector<std::uint32_t>& a_counts() const noexcept { return a_; }
    [[nodiscard]] const std::vector<char>& b_present() const noexcept { return b_; }
    [[nodiscard]] std::uint64_t annihilations() const noexcept { return annihilations_; }

    /// Returns the time of the applied event, or nullopt past the horizon
    /// or when no A-particle is left.
    std::optional<double> step(double horizon);

private:
    Box window_;
    JumpKernel kernel_;
    abelian::InstructionTape tape_;
    std::vector<std::uint32_t> a_;
    std::vector<char> b_;
    std::vector<std::uint64_t> departures_;
    std::mt19937_64 clock_;
    std::uint64_t total_a_ = 0;
    double time_ = 0.0;
    std::uint64_t annihilations_ = 0;
    std::optional<double> pending_;
};

struct AnnihilatingEquivalence {
    bool identical = true;
    std::uint64_t events = 0;
    std::optional<std::uint64_t> first_mismatch;   ///< event number
};

/// Runs the annihilating system and the particle-hole dynamics on shared
/// clock and tape randomness and compares per-site unsettled counts and
/// event times after every event.
AnnihilatingEquivalence annihilating_equivalence(const InitialLaw& law, const Box& window, double horizon,
                                                 const SeedSpec& seed, const JumpKernel& kernel,
                                                 std::uint64_t event_budget = kDefaultEventBudget);

// ++ Checks ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct MassTransportCheck {
    bool ok = true;
    bool settled_equals_filled = true;
    bool bound_holds = true;
    double min_unfilled_density = 1.0;
    double final_unfilled_density = 1.0;
};

/// At every record: settled particles == filled holes, and the unfilled-hole
/// density is at least 1 - mu - allowance.
MassTransportCheck mass_transport_check(const ObservableSeries& series, double mu, double allowance = 0.02);

struct FixationRecord {
    double last_activity_time = 0.0;
    bool still_active = false;
    bool truncated = false;
    ObservableSeries series;
};

/// Horizon-censored activity indicator for `probe`: the last event whose
/// source or target lies in the probe box, and whether it falls in the final
/// `tail_fraction` of the horizon.
FixationRecord fixation_probe(const ModelParams& params, const InitialLaw& law, const Box& window,
                              const Box& probe, double horizon, const SeedSpec& seed, double tail_fraction = 0.5,
                              std::uint64_t event_budget = kDefaultEventBudget);

} // namespace arw::dynamics

#endif
