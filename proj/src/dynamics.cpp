#include "arw/dynamics.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace arw::dynamics {

namespace {

double exponential(std::mt19937_64& engine, double rate)
{
    return -std::log1p(-uniform01(engine)) / rate;
}

std::vector<char> mask_of(const Box& window, const std::optional<Box>& box)
{
    std::vector<char> in(window.size(), 0);
    if (!box)
        return in;
    for (std::size_t i = 0; i < window.size(); ++i)
        in[i] = box->contains(window.coord_of(i)) ? 1 : 0;
    return in;
}

} // namespace

// ++ ActiveIndex +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

ActiveIndex::ActiveIndex(std::size_t n) : tree_(n + 1, 0), top_bit_{n == 0 ? 0 : std::bit_floor(n)} {}

void ActiveIndex::add(std::size_t i, std::int64_t delta)
{
    total_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(total_) + delta);
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1))
        tree_[k] = static_cast<std::uint64_t>(static_cast<std::int64_t>(tree_[k]) + delta);
}

std::size_t ActiveIndex::find(std::uint64_t r) const noexcept
{
    std::size_t pos = 0;
    for (std::size_t bit = top_bit_; bit != 0; bit >>= 1) {
        const std::size_t next = pos + bit;
        if (next < tree_.size() && tree_[next] <= r) {
            pos = next;
            r -= tree_[next];
        }
    }
    return pos;
}

// ++ Simulator +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

Simulator::Simulator(Configuration config, const ModelParams& params, const SeedSpec& seed)
    : config_{std::move(config)},
      params_{params},
      tape_{config_.window(), params, seed.stream(Purpose::Tape)},
      odometer_{config_.window(), config_.window()},
      index_{config_.size()},
      clock_{seed.engine(Purpose::Clock)},
      rate_per_particle_{params.clock_rate_per_particle()}
{
    settled_ = apply_initial_settling(config_, params_);
    for (std::size_t i = 0; i < config_.size(); ++i)
        if (config_[i].active > 0)
            index_.add(i, config_[i].active);
}

double Simulator::total_rate() const noexcept
{
    return rate_per_particle_ * static_cast<double>(index_.total());
}

std::vector<double> Simulator::rates() const
{
    std::vector<double> r(config_.size());
    for (std::size_t i = 0; i < config_.size(); ++i)
        r[i] = rate_per_particle_ * config_[i].active;
    return r;
}

SiteIndex Simulator::sample_site()
{
    if (absorbed())
        throw std::logic_error("sample_site: no active particle");
    return index_.find(uniform_index(clock_, index_.total()));
}

std::optional<double> Simulator::next_time()
{
    if (absorbed())
        return std::nullopt;
    if (!pending_time_)
        pending_time_ = time_ + exponential(clock_, total_rate());
    return pending_time_;
}

std::optional<Event> Simulator::step(double horizon)
{
    const auto t = next_time();
    if (!t || *t > horizon)
        return std::nullopt;
    pending_time_.reset();
    time_ = *t;
    const SiteIndex x = sample_site();

    const SiteIndex y = config_.window().neighbor(x, tape_.peek(x).dir);
    const bool jump = !tape_.peek(x).is_sleep();
    const SiteState before_x = config_[x];
    const SiteState before_y = (jump && y != kOutside) ? config_[y] : SiteState{};

    Event ev{time_, x, abelian::topple(config_, tape_, x)};
    ++odometer_[x];
    ++events_;

    auto settle_delta = [](const SiteState& a, const SiteState& b) {
        return static_cast<int>(b.settled()) - static_cast<int>(a.settled());
    };
    index_.add(x, static_cast<std::int64_t>(config_[x].active) - before_x.active);
    settled_ += settle_delta(before_x, config_[x]);
    if (ev.topple.target != kOutside) {
        index_.add(y, static_cast<std::int64_t>(config_[y].active) - before_y.active);
        settled_ += settle_delta(before_y, config_[y]);
    }
    return ev;
}

ObservableRecord Simulator::record(const std::optional<Box>& probe) const
{
    ObservableRecord r;
    r.time = time_;
    r.density = density_stats(config_);
    r.settled_particles = settled_;
    r.filled_holes = r.density.settled;
    r.events = events_;
    if (probe) {
        const Box& w = config_.window();
        for (std::size_t i = 0; i < config_.size() && !r.probe_active; ++i)
            r.probe_active = config_[i].active > 0 && probe->contains(w.coord_of(i));
    }
    return r;
}

// ++ simulate ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

SimulationResult simulate_from(Configuration initial, const ModelParams& params, double horizon,
                               const SeedSpec& seed, const SimulateOptions& options)
{
    if (!(horizon > 0.0))
        throw std::invalid_argument("simulate: horizon must be > 0");
    if (!(options.first_sample > 0.0) || !(options.sample_ratio > 1.0))
        throw std::invalid_argument("simulate: need first_sample > 0 and sample_ratio > 1");
    params.validate();

    const auto probe_mask = mask_of(initial.window(), options.probe);
    Simulator sim{std::move(initial), params, seed};
    SimulationResult out;

    auto push = [&](double t) {
        auto r = sim.record(options.probe);
        r.time = t;
        out.series.records.push_back(r);
    };

    push(0.0);
    double next_sample = options.first_sample;
    for (;;) {
        const auto t = sim.next_time();
        if (!t || *t > horizon)
            break;
        for (; next_sample < *t && next_sample < horizon; next_sample *= options.sample_ratio)
            push(next_sample);
        if (sim.events() >= options.event_budget) {
            out.truncated = true;
            break;
        }
        const auto ev = sim.step(horizon);
        if (options.probe && (probe_mask[ev->source] || (ev->topple.target != kOutside && probe_mask[ev->topple.target])))
            out.last_probe_activity = ev->time;
    }

    out.absorbed = sim.absorbed();
    if (std::isfinite(horizon) && !out.truncated) {
        for (; next_sample < horizon; next_sample *= options.sample_ratio)
            push(next_sample);
        push(horizon);
        out.end_time = horizon;
    } else {
        out.end_time = sim.time();
        if (out.end_time > out.series.records.back().time)
            push(out.end_time);
    }

    out.events = sim.events();
    out.final_config = sim.config();
    out.odometer = sim.odometer();

    const auto total = out.final_config.total_particles();
    if (total > 0 && static_cast<double>(out.final_config.exited_total()) >
                         options.exit_warning_fraction * static_cast<double>(total))
        out.warnings.push_back(std::to_string(out.final_config.exited_total()) + " of " + std::to_string(total) +
                               " particles left the window; densities are boundary-affected");
    if (out.truncated)
        out.warnings.push_back("event budget exhausted; series truncated");
    return out;
}

SimulationResult simulate(const ModelParams& params, const InitialLaw& law, const Box& window, double horizon,
                          const SeedSpec& seed, const SimulateOptions& options)
{
    return simulate_from(sample_initial(law, window, seed, options.cap), params, horizon, seed, options);
}

// ++ AnnihilatingSystem ++++++++++++++++++++++++++++++++++++++++++++++++++++++

AnnihilatingSystem::AnnihilatingSystem(const Configuration& initial, const ModelParams& params, const SeedSpec& seed)
    : window_{initial.window()},
      kernel_{params.kernel},
      tape_{initial.window(), params, seed.stream(Purpose::Tape)},
      a_(initial.size(), 0),
      b_(initial.size(), 1),
      departures_(initial.size(), 0),
      clock_{seed.engine(Purpose::Clock)}
{
    if (params.model != Model::Annihilating || params.d_b != 0.0)
        throw std::invalid_argument("AnnihilatingSystem: requires the annihilating model with D_B = 0");
    for (std::size_t i = 0; i < initial.size(); ++i) {
        std::uint32_t n = initial[i].particles();
        // At t = 0 one A-particle meets the B-particle of its own site.
        if (n > 0) {
            --n;
            b_[i] = 0;
            ++annihilations_;
        }
        a_[i] = n;
        total_a_ += n;
    }
}

std::optional<double> AnnihilatingSystem::step(double horizon)
{
    if (total_a_ == 0)
        return std::nullopt;
    if (!pending_)
        pending_ = time_ + exponential(clock_, static_cast<double>(total_a_));
    if (*pending_ > horizon)
        return std::nullopt;
    time_ = *pending_;
    pending_.reset();

    std::uint64_t r = uniform_index(clock_, total_a_);
    std::size_t x = 0;
    while (r >= a_[x]) {
        r -= a_[x];
        ++x;
    }

    const auto ins = tape_.at(x, departures_[x]++);
    --a_[x];
    --total_a_;
    const auto y = window_.neighbor(x, ins.dir);
    if (y == kOutside)
        return time_;
    if (b_[y]) {
        b_[y] = 0;
        ++annihilations_;
    } else {
        ++a_[y];
        ++total_a_;
    }
    return time_;
}

AnnihilatingEquivalence annihilating_equivalence(const InitialLaw& law, const Box& window, double horizon,
                                                 const SeedSpec& seed, const JumpKernel& kernel,
                                                 std::uint64_t event_budget)
{
    const auto initial = sample_initial(law, window, seed);
    AnnihilatingSystem two_type{initial, ModelParams::annihilating(kernel), seed};
    Simulator ph{initial, ModelParams::particle_hole(kernel), seed};

    AnnihilatingEquivalence out;
    auto same_state = [&] {
        const auto& a = two_type.a_counts();
        const auto& b = two_type.b_present();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto& s = ph.config()[i];
            if (s.active != a[i] || s.settled() == static_cast<bool>(b[i]))
                return false;
        }
        return true;
    };

    if (!same_state()) {
        out.identical = false;
        out.first_mismatch = 0;
        return out;
    }
    while (out.events < event_budget) {
        const auto t_two = two_type.step(horizon);
        const auto ev = ph.step(horizon);
        if (!t_two && !ev)
            break;
        ++out.events;
        if (!t_two || !ev || *t_two != ev->time || !same_state()) {
            out.identical = false;
            out.first_mismatch = out.events;
            return out;
        }
    }
    return out;
}

// ++ Checks ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

MassTransportCheck mass_transport_check(const ObservableSeries& series, double mu, double allowance)
{
    MassTransportCheck c;
    const double bound = 1.0 - mu - allowance;
    for (const auto& r : series.records) {
        if (r.settled_particles != r.filled_holes)
            c.settled_equals_filled = false;
        const double u = r.density.unfilled_hole_density();
        c.min_unfilled_density = std::min(c.min_unfilled_density, u);
        if (u < bound)
            c.bound_holds = false;
    }
    if (!series.records.empty())
        c.final_unfilled_density = series.records.back().density.unfilled_hole_density();
    c.ok = c.settled_equals_filled && c.bound_holds;
    return c;
}

FixationRecord fixation_probe(const ModelParams& params, const InitialLaw& law, const Box& window, const Box& probe,
                              double horizon, const SeedSpec& seed, double tail_fraction, std::uint64_t event_budget)
{
    if (!std::isfinite(horizon))
        throw std::invalid_argument("fixation_probe: horizon must be finite");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("fixation_probe: tail_fraction must lie in (0, 1]");
    if (!window.contains(probe))
        throw std::invalid_argument("fixation_probe: probe box is not inside the window");
    SimulateOptions opts;
    opts.probe = probe;
    opts.event_budget = event_budget;
    const auto res = simulate(params, law, window, horizon, seed, opts);
    FixationRecord rec;
    rec.last_activity_time = res.last_probe_activity.value_or(0.0);
    rec.still_active = rec.last_activity_time > (1.0 - tail_fraction) * horizon;
    rec.truncated = res.truncated;
    rec.series = res.series;
    return rec;
}

} // namespace arw::dynamics
