#ifndef ARW_ABELIAN_HPP
#define ARW_ABELIAN_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "arw/core.hpp"

namespace arw::abelian {

// ++ Instructions ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct Instruction {
    enum class Kind : std::uint8_t { Jump, Sleep };

    Kind kind = Kind::Jump;
    int dir = 0;   ///< jump direction, meaningful for Jump only

    static constexpr Instruction jump(int d) noexcept { return {Kind::Jump, d}; }
    static constexpr Instruction sleep() noexcept { return {Kind::Sleep, 0}; }

    [[nodiscard]] bool is_sleep() const noexcept { return kind == Kind::Sleep; }

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

enum class TapeMode {
    SiteWise,       ///< instruction k at x is a pure function of (key, x, k)
    SharedStream,   ///< negative control: one global stream read in toppling order
};

/// Site-wise randomness: for each site an i.i.d. sequence of instructions,
/// Jump(y) with probability p(y) / (1 + lambda) and Sleep with probability
/// lambda / (1 + lambda); only jumps when lambda = inf or for particle-hole.
/// Instructions are never stored: they are recomputed from the counter-based
/// generator, so a sampled instruction can not change. Cursors count the
/// instructions used at each site.
class InstructionTape {
public:
    InstructionTape(const Box& window, const ModelParams& params, std::uint64_t key,
                    TapeMode mode = TapeMode::SiteWise);

    /// k-th instruction at window site i (0-based). Pure in SiteWise mode.
    [[nodiscard]] Instruction at(SiteIndex i, std::uint64_t k) const;
    /// k-th instruction at an arbitrary lattice site.
    [[nodiscard]] Instruction at_coord(const Coord& c, std::uint64_t k) const;

    [[nodiscard]] Instruction peek(SiteIndex i) const;
    Instruction consume(SiteIndex i);

    [[nodiscard]] std::uint64_t cursor(SiteIndex i) const { return cursor_.at(i); }
    [[nodiscard]] const std::vector<std::uint64_t>& cursors() const noexcept { return cursor_; }
    /// Forget all usage; equivalent to a fresh copy of the same tape.
    void rewind();

    [[nodiscard]] const Box& window() const noexcept { return window_; }
    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
    [[nodiscard]] Semantics semantics() const noexcept { return semantics_; }
    [[nodiscard]] std::uint64_t key() const noexcept { return rng_.key(); }
    [[nodiscard]] TapeMode mode() const noexcept { return mode_; }

private:
    [[nodiscard]] Instruction decode(double u) const noexcept;

    Box window_;
    ModelParams params_;
    Semantics semantics_;
    double sleep_probability_;
    CounterRng rng_;
    TapeMode mode_;
    std::vector<std::uint64_t> keys_;
    std::vector<std::uint64_t> cursor_;
    std::uint64_t shared_counter_ = 0;
};

// ++ Toppling ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct ToppleResult {
    Instruction instruction;
    SiteIndex target = kOutside;   ///< receiving site, kOutside for Sleep or exit
    bool exited = false;
};

/// Topples unstable site `x`: consumes its next instruction and applies it.
/// Throws std::logic_error when `x` is stable (illegal toppling).
ToppleResult topple(Configuration& config, InstructionTape& tape, SiteIndex x);

/// Finite sequence of sites, read as a toppling order.
struct TopplingSequence {
    std::vector<Coord> sites;

    [[nodiscard]] bool contained_in(const Box& v) const;
};

/// Per-site toppling counts m(x) over the window; zero outside the box V
/// the counts were produced for.
class Odometer {
public:
    Odometer() = default;
    Odometer(Box window, Box box);

    [[nodiscard]] std::uint64_t operator[](SiteIndex i) const { return counts_[i]; }
    std::uint64_t& operator[](SiteIndex i) { return counts_[i]; }
    [[nodiscard]] std::uint64_t at(const Coord& c) const;

    [[nodiscard]] const Box& window() const noexcept { return window_; }
    [[nodiscard]] const Box& box() const noexcept { return box_; }
    [[nodiscard]] const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
    [[nodiscard]] std::uint64_t total() const noexcept;

    /// Adds another odometer over the same window; the box becomes `box`.
    void accumulate(const Odometer& other, const Box& box);

    friend bool operator==(const Odometer& a, const Odometer& b) { return a.counts_ == b.counts_; }

private:
    Box window_;
    Box box_;
    std::vector<std::uint64_t> counts_;
};

/// Applies `sequence` toppling by toppling. Throws std::logic_error on the
/// first illegal toppling.
Odometer apply_sequence(Configuration& config, InstructionTape& tape, const TopplingSequence& sequence);

// ++ Stabilization +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

enum class OrderPolicy { LeftmostUnstable, Fifo, Random };

inline constexpr std::uint64_t kDefaultToppleBudget = 1'000'000'000ULL;

struct StabilizeOptions {
    OrderPolicy policy = OrderPolicy::LeftmostUnstable;
    std::uint64_t order_seed = 0;    ///< Random policy only
    std::uint64_t budget = kDefaultToppleBudget;
};

enum class StabilizeStatus { Stable, BudgetExceeded };

struct StabilizeResult {
    Odometer odometer;
    StabilizeStatus status = StabilizeStatus::Stable;
    std::uint64_t topplings = 0;

    [[nodiscard]] bool stable() const noexcept { return status == StabilizeStatus::Stable; }
};

/// Topples unstable sites of `v` until every site of `v` is stable, in the
/// order chosen by the policy. Applies the t = 0 settling first. Mutates
/// `config` and `tape`. On budget exhaustion the partial state is kept and
/// the status says so.
StabilizeResult stabilize(Configuration& config, InstructionTape& tape, const Box& v,
                          const StabilizeOptions& options = {});

[[nodiscard]] std::string to_string(OrderPolicy p);
[[nodiscard]] OrderPolicy parse_order_policy(const std::string& name);

// ++ Property checks +++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct AbelianCheck {
    bool ok = true;
    std::uint64_t topplings = 0;   ///< of the first trial
    std::optional<std::pair<Odometer, Odometer>> witness;
    bool budget_exceeded = false;
};

/// Stabilizes copies of (config, tape) in `v` `trials` times with different
/// orders. With `mixed_policies` the first two trials use the leftmost and
/// FIFO policies and the rest are random; otherwise every trial is random.
AbelianCheck check_abelian(const Configuration& config, const InstructionTape& tape, const Box& v, int trials,
                           std::uint64_t order_seed, bool mixed_policies = true,
                           std::uint64_t budget = kDefaultToppleBudget);

struct MonotonicityCheck {
    bool ok = true;
    Odometer inner;
    Odometer outer;
};

/// m_V <= m_V' componentwise. Throws std::invalid_argument unless V is in V'.
MonotonicityCheck check_monotonicity(const Configuration& config, const InstructionTape& tape, const Box& v,
                                     const Box& v_outer);

struct GrowthPoint {
    std::int64_t radius = 0;
    std::uint64_t origin_odometer = 0;
    StabilizeStatus status = StabilizeStatus::Stable;
    bool computed = false;
    std::uint64_t topplings = 0;   ///< cumulative
};

struct GrowthOptions {
    int dim = 1;
    StabilizeOptions stabilize;
};

/// m_{V_n}(o) for V_n = {-r_n..r_n}^d over one configuration and one tape.
/// Each box is stabilized starting from the state left by the previous one,
/// which by the Abelian property yields m_{V_n}. Radii must increase.
std::vector<GrowthPoint> odometer_growth(const InitialLaw& law, const ModelParams& params,
                                         const std::vector<std::int64_t>& radii, const SeedSpec& seed,
                                         const GrowthOptions& options = {});

struct EquivalenceCheck {
    bool equal = true;
    Odometer arw;
    Odometer particle_hole;
};

/// Stabilizes the same (t = 0-) configuration and tape key under ARW with
/// lambda = inf and under the particle-hole model. Throws
/// std::invalid_argument unless `params` is an ARW with lambda = inf.
EquivalenceCheck equivalence_arw_ph(const Configuration& config, const ModelParams& params, const Box& v,
                                    std::uint64_t tape_key);

} // namespace arw::abelian

#endif
