#include "arw/abelian.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>

namespace arw::abelian {

// ++ InstructionTape +++++++++++++++++++++++++++++++++++++++++++++++++++++++++

InstructionTape::InstructionTape(const Box& window, const ModelParams& params, std::uint64_t key, TapeMode mode)
    : window_{window},
      params_{params},
      semantics_{params.semantics()},
      sleep_probability_{params.sleep_probability()},
      rng_{key},
      mode_{mode},
      cursor_(window.size(), 0)
{
    params_.validate();
    if (params.kernel.dim() != window.dim())
        throw std::invalid_argument("InstructionTape: kernel and window dimensions differ");
    keys_.reserve(window.size());
    for (std::size_t i = 0; i < window.size(); ++i)
        keys_.push_back(site_key(window.coord_of(i)));
}

Instruction InstructionTape::decode(double u) const noexcept
{
    if (sleep_probability_ > 0.0) {
        if (u < sleep_probability_)
            return Instruction::sleep();
        u = (u - sleep_probability_) / (1.0 - sleep_probability_);
    }
    return Instruction::jump(params_.kernel.pick(u));
}

Instruction InstructionTape::at(SiteIndex i, std::uint64_t k) const
{
    return decode(rng_.uniform(keys_.at(i), k));
}

Instruction InstructionTape::at_coord(const Coord& c, std::uint64_t k) const
{
    return decode(rng_.uniform(site_key(c), k));
}

Instruction InstructionTape::peek(SiteIndex i) const
{
    if (mode_ == TapeMode::SharedStream)
        return decode(rng_.uniform(0, shared_counter_));
    return at(i, cursor_.at(i));
}

Instruction InstructionTape::consume(SiteIndex i)
{
    const Instruction ins = peek(i);
    ++cursor_.at(i);
    if (mode_ == TapeMode::SharedStream)
        ++shared_counter_;
    return ins;
}

void InstructionTape::rewind()
{
    std::fill(cursor_.begin(), cursor_.end(), 0);
    shared_counter_ = 0;
}

// ++ Toppling ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

ToppleResult topple(Configuration& config, InstructionTape& tape, SiteIndex x)
{
    auto& site = config[x];
    if (site.active == 0)
        throw std::logic_error("illegal toppling: site is stable");

    ToppleResult result{tape.consume(x)};
    const auto semantics = tape.semantics();

    if (result.instruction.is_sleep()) {
        // A+A stays awake; only a lone active particle falls asleep.
        if (site.active == 1) {
            site.active = 0;
            site.marker = Marker::Sleeping;
        }
        return result;
    }

    --site.active;
    if (semantics == Semantics::ArwInfinite && site.active == 1) {
        site.active = 0;
        site.marker = Marker::Settled;
    }

    const SiteIndex y = config.window().neighbor(x, result.instruction.dir);
    if (y == kOutside) {
        config.record_exit(result.instruction.dir);
        result.exited = true;
        return result;
    }
    result.target = y;

    auto& target = config[y];
    switch (semantics) {
    case Semantics::ParticleHole:
        if (target.marker != Marker::Settled)
            target.marker = Marker::Settled;
        else
            ++target.active;
        break;
    case Semantics::ArwInfinite:
        if (target.active == 0 && target.marker == Marker::None) {
            target.marker = Marker::Settled;
        } else if (target.active == 0 && target.marker == Marker::Settled) {
            target.marker = Marker::None;
            target.active = 2;
        } else {
            ++target.active;
        }
        break;
    case Semantics::ArwFinite:
        if (target.marker == Marker::Sleeping) {
            target.marker = Marker::None;
            target.active = 2;
        } else {
            ++target.active;
        }
        break;
    }
    return result;
}

bool TopplingSequence::contained_in(const Box& v) const
{
    return std::all_of(sites.begin(), sites.end(), [&](const Coord& c) { return v.contains(c); });
}

Odometer::Odometer(Box window, Box box) : window_{window}, box_{box}, counts_(window.size(), 0) {}

std::uint64_t Odometer::at(const Coord& c) const
{
    const auto i = window_.index_of(c);
    return i == kOutside ? 0 : counts_[i];
}

std::uint64_t Odometer::total() const noexcept
{
    std::uint64_t n = 0;
    for (auto c : counts_)
        n += c;
    return n;
}

void Odometer::accumulate(const Odometer& other, const Box& box)
{
    if (counts_.empty()) {
        *this = other;
        box_ = box;
        return;
    }
    if (other.counts_.size() != counts_.size())
        throw std::invalid_argument("Odometer: windows differ");
    for (std::size_t i = 0; i < counts_.size(); ++i)
        counts_[i] += other.counts_[i];
    box_ = box;
}

Odometer apply_sequence(Configuration& config, InstructionTape& tape, const TopplingSequence& sequence)
{
    const Box& window = config.window();
    Odometer odometer{window, window};
    for (const auto& c : sequence.sites) {
        const auto i = window.index_of(c);
        if (i == kOutside)
            throw std::logic_error("illegal toppling: site outside the window");
        topple(config, tape, i);
        ++odometer[i];
    }
    return odometer;
}

// ++ Stabilization +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

namespace {

std::vector<char> membership(const Box& window, const Box& v)
{
    std::vector<char> in(window.size(), 0);
    for (std::size_t i = 0; i < window.size(); ++i)
        in[i] = v.contains(window.coord_of(i)) ? 1 : 0;
    return in;
}

/// Runs the toppling loop with a worklist. `next` yields the next candidate
/// or kOutside when the worklist is exhausted; `touched` reports sites whose
/// state may have changed.
template <class Next, class Touched>
StabilizeResult run_loop(Configuration& config, InstructionTape& tape, const Box& v, std::uint64_t budget,
                         const std::vector<char>& in_v, Next next, Touched touched)
{
    StabilizeResult result{Odometer{config.window(), v}};
    for (;;) {
        const SiteIndex x = next();
        if (x == kOutside)
            break;
        if (config[x].active == 0)
            continue;
        if (result.topplings >= budget) {
            result.status = StabilizeStatus::BudgetExceeded;
            return result;
        }
        const auto r = topple(config, tape, x);
        ++result.odometer[x];
        ++result.topplings;
        touched(x);
        if (r.target != kOutside && in_v[r.target])
            touched(r.target);
    }
    return result;
}

} // namespace

StabilizeResult stabilize(Configuration& config, InstructionTape& tape, const Box& v, const StabilizeOptions& options)
{
    const Box& window = config.window();
    if (!window.contains(v))
        throw std::invalid_argument("stabilize: box V is not inside the window");
    if (tape.window() != window)
        throw std::invalid_argument("stabilize: tape and configuration windows differ");
    apply_initial_settling(config, tape.params());

    const auto in_v = membership(window, v);
    auto unstable = [&](SiteIndex i) { return in_v[i] && config[i].active > 0; };

    switch (options.policy) {
    case OrderPolicy::LeftmostUnstable: {
        std::priority_queue<SiteIndex, std::vector<SiteIndex>, std::greater<>> heap;
        std::vector<char> queued(window.size(), 0);
        auto push = [&](SiteIndex i) {
            if (unstable(i) && !queued[i]) {
                heap.push(i);
                queued[i] = 1;
            }
        };
        for (std::size_t i = 0; i < window.size(); ++i)
            push(i);
        return run_loop(
            config, tape, v, options.budget, in_v,
            [&]() -> SiteIndex {
                while (!heap.empty()) {
                    const auto x = heap.top();
                    if (config[x].active > 0)
                        return x;
                    heap.pop();
                    queued[x] = 0;
                }
                return kOutside;
            },
            push);
    }
    case OrderPolicy::Fifo: {
        std::deque<SiteIndex> queue;
        std::vector<char> queued(window.size(), 0);
        for (std::size_t i = 0; i < window.size(); ++i)
            if (unstable(i)) {
                queue.push_back(i);
                queued[i] = 1;
            }
        return run_loop(
            config, tape, v, options.budget, in_v,
            [&]() -> SiteIndex {
                if (queue.empty())
                    return kOutside;
                const auto x = queue.front();
                queue.pop_front();
                queued[x] = 0;
                return x;
            },
            [&](SiteIndex i) {
                if (unstable(i) && !queued[i]) {
                    queue.push_back(i);
                    queued[i] = 1;
                }
            });
    }
    case OrderPolicy::Random: {
        std::vector<SiteIndex> pool;
        std::vector<SiteIndex> slot(window.size(), kOutside);
        auto add = [&](SiteIndex i) {
            slot[i] = pool.size();
            pool.push_back(i);
        };
        auto remove = [&](SiteIndex i) {
            const auto s = slot[i];
            slot[pool.back()] = s;
            pool[s] = pool.back();
            pool.pop_back();
            slot[i] = kOutside;
        };
        for (std::size_t i = 0; i < window.size(); ++i)
            if (unstable(i))
                add(i);
        std::mt19937_64 engine{hash_combine(options.order_seed, static_cast<std::uint64_t>(Purpose::Order))};
        return run_loop(
            config, tape, v, options.budget, in_v,
            [&]() -> SiteIndex {
                if (pool.empty())
                    return kOutside;
                return pool[uniform_index(engine, pool.size())];
            },
            [&](SiteIndex i) {
                const bool is_unstable = unstable(i);
                if (is_unstable && slot[i] == kOutside)
                    add(i);
                else if (!is_unstable && slot[i] != kOutside)
                    remove(i);
            });
    }
    }
    throw std::logic_error("stabilize: unknown policy");
}

std::string to_string(OrderPolicy p)
{
    switch (p) {
    case OrderPolicy::LeftmostUnstable: return "leftmost";
    case OrderPolicy::Fifo: return "fifo";
    case OrderPolicy::Random: return "random";
    }
    return "?";
}

OrderPolicy parse_order_policy(const std::string& name)
{
    if (name == "leftmost")
        return OrderPolicy::LeftmostUnstable;
    if (name == "fifo")
        return OrderPolicy::Fifo;
    if (name == "random")
        return OrderPolicy::Random;
    throw std::invalid_argument("unknown order policy '" + name + "'");
}

// ++ Property checks +++++++++++++++++++++++++++++++++++++++++++++++++++++++++

AbelianCheck check_abelian(const Configuration& config, const InstructionTape& tape, const Box& v, int trials,
                           std::uint64_t order_seed, bool mixed_policies, std::uint64_t budget)
{
    if (trials < 2)
        throw std::invalid_argument("check_abelian: need at least two trials");
    AbelianCheck check;
    std::optional<Odometer> reference;
    std::optional<Configuration> reference_final;
    for (int t = 0; t < trials; ++t) {
        StabilizeOptions options;
        options.budget = budget;
        options.order_seed = hash_combine(order_seed, static_cast<std::uint64_t>(t));
        if (mixed_policies && t == 0)
            options.policy = OrderPolicy::LeftmostUnstable;
        else if (mixed_policies && t == 1)
            options.policy = OrderPolicy::Fifo;
        else
            options.policy = OrderPolicy::Random;

        Configuration c = config;
        InstructionTape tp = tape;
        auto result = stabilize(c, tp, v, options);
        if (!result.stable()) {
            check.budget_exceeded = true;
            check.ok = false;
            return check;
        }
        if (!reference) {
            check.topplings = result.topplings;
            reference = result.odometer;
            reference_final = std::move(c);
            continue;
        }
        if (!(result.odometer == *reference) || !(c == *reference_final)) {
            check.ok = false;
            check.witness.emplace(*reference, result.odometer);
            return check;
        }
    }
    return check;
}

MonotonicityCheck check_monotonicity(const Configuration& config, const InstructionTape& tape, const Box& v,
                                     const Box& v_outer)
{
    if (!v_outer.contains(v))
        throw std::invalid_argument("check_monotonicity: V is not contained in V'");
    MonotonicityCheck check;
    {
        Configuration c = config;
        InstructionTape tp = tape;
        auto r = stabilize(c, tp, v);
        if (!r.stable())
            throw std::runtime_error("check_monotonicity: toppling budget exceeded");
        check.inner = std::move(r.odometer);
    }
    {
        Configuration c = config;
        InstructionTape tp = tape;
        auto r = stabilize(c, tp, v_outer);
        if (!r.stable())
            throw std::runtime_error("check_monotonicity: toppling budget exceeded");
        check.outer = std::move(r.odometer);
    }
    for (std::size_t i = 0; i < check.inner.counts().size(); ++i)
        if (check.inner[i] > check.outer[i])
            check.ok = false;
    return check;
}

std::vector<GrowthPoint> odometer_growth(const InitialLaw& law, const ModelParams& params,
                                         const std::vector<std::int64_t>& radii, const SeedSpec& seed,
                                         const GrowthOptions& options)
{
    if (radii.empty())
        return {};
    for (std::size_t i = 0; i < radii.size(); ++i)
        if (radii[i] < 0 || (i > 0 && radii[i] <= radii[i - 1]))
            throw std::invalid_argument("odometer_growth: radii must be nonnegative and increasing");

    const Box window = Box::centered(options.dim, radii.back());
    Configuration config = sample_initial(law, window, seed);
    InstructionTape tape{window, params, seed.stream(Purpose::Tape)};
    const Coord origin{0, 0, 0};

    std::vector<GrowthPoint> points;
    Odometer total;
    std::uint64_t used = 0;
    bool exhausted = false;
    for (auto r : radii) {
        GrowthPoint p;
        p.radius = r;
        if (exhausted) {
            p.status = StabilizeStatus::BudgetExceeded;
            points.push_back(p);
            continue;
        }
        StabilizeOptions opts = options.stabilize;
        opts.budget = options.stabilize.budget - used;
        const Box v = Box::centered(options.dim, r);
        auto res = stabilize(config, tape, v, opts);
        used += res.topplings;
        total.accumulate(res.odometer, v);
        p.status = res.status;
        p.computed = res.stable();
        p.origin_odometer = total.at(origin);
        p.topplings = used;
        exhausted = !res.stable();
        points.push_back(p);
    }
    return points;
}

EquivalenceCheck equivalence_arw_ph(const Configuration& config, const ModelParams& params, const Box& v,
                                    std::uint64_t tape_key)
{
    if (params.model != Model::ARW || !params.infinite_sleep_rate())
        throw std::invalid_argument("equivalence_arw_ph: requires the ARW with lambda = inf");
    const auto ph = ModelParams::particle_hole(params.kernel);

    EquivalenceCheck check;
    {
        Configuration c = config;
        InstructionTape tape{c.window(), params, tape_key};
        auto r = stabilize(c, tape, v);
        if (!r.stable())
            throw std::runtime_error("equivalence_arw_ph: toppling budget exceeded");
        check.arw = std::move(r.odometer);
    }
    {
        Configuration c = config;
        InstructionTape tape{c.window(), ph, tape_key};
        auto r = stabilize(c, tape, v);
        if (!r.stable())
            throw std::runtime_error("equivalence_arw_ph: toppling budget exceeded");
        check.particle_hole = std::move(r.odometer);
    }
    check.equal = check.arw == check.particle_hole;
    return check;
}

} // namespace arw::abelian
