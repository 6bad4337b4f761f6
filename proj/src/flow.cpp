#include "arw/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "arw/abelian.hpp"
#include "arw/parallel.hpp"

namespace arw::flow {

ProfileWalk profile_walk(const Configuration& config, std::int64_t n)
{
    const Box& w = config.window();
    if (n < 0 || w.dim() != 1 || w.lo()[0] > -n || w.hi()[0] < 0)
        throw std::invalid_argument("profile_walk: window must cover [-n, 0]");
    ProfileWalk out;
    out.s.reserve(static_cast<std::size_t>(n) + 1);
    std::int64_t acc = 0;
    for (std::int64_t k = 0; k <= n; ++k) {
        acc += static_cast<std::int64_t>(config.at(Coord{-k, 0, 0}).particles()) - 1;
        out.s.push_back(acc);
    }
    return out;
}

std::int64_t flux_oracle_discrete(const ProfileWalk& profile, std::int64_t n)
{
    if (n < 0 || static_cast<std::size_t>(n) >= profile.s.size())
        throw std::invalid_argument("flux_oracle_discrete: n out of range");
    std::int64_t best = 0;
    for (std::int64_t k = 0; k <= n; ++k)
        best = std::max(best, profile.s[static_cast<std::size_t>(k)]);
    return best;
}

std::uint64_t absorbed_flux(const Configuration& config)
{
    Configuration c = config;
    const auto params = ModelParams::particle_hole(JumpKernel::biased(1.0));
    abelian::InstructionTape tape{c.window(), params, 0};
    const auto res = abelian::stabilize(c, tape, c.window());
    if (!res.stable())
        throw std::runtime_error("absorbed_flux: toppling budget exceeded");
    return c.exited_right();
}

std::uint64_t FlowTrace::count(double t) const
{
    return static_cast<std::uint64_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

FlowWindow default_window(double p, double horizon)
{
    if (!(p > 0.5 && p <= 1.0))
        throw std::invalid_argument("flow window: requires p > 1/2");
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("flow window: horizon must be finite and >= 0");
    const double v = 2.0 * p - 1.0;
    FlowWindow w;
    w.left = static_cast<std::int64_t>(std::ceil(v * horizon + 8.0 * std::sqrt(horizon)));
    const double q = 1.0 - p;
    w.right = 16;
    if (q > 0.0)
        w.right = std::max<std::int64_t>(16, static_cast<std::int64_t>(std::ceil(30.0 * std::log(10.0) /
                                                                               std::log(p / q))));
    return w;
}

bool window_too_small(const FlowWindow& window, double p, double horizon)
{
    if (!std::isfinite(horizon))
        return false;
    const double v = 2.0 * p - 1.0;
    return static_cast<double>(window.left) < v * horizon + 5.0 * std::sqrt(horizon);
}

std::string_view to_string(FlowModel m)
{
    return m == FlowModel::ParticleHole ? "particle-hole" : "arw-inf";
}

namespace {

// One token per surplus particle: a filled site keeps its first particle for
// good, so only the surplus ever moves.
void run_particle_hole(double p, const Configuration& initial, std::int64_t origin, double horizon,
                       SplitMix64& engine, FlowRun& run)
{
    const auto n = static_cast<std::int64_t>(initial.size());
    struct Token {
        std::int64_t pos;
        bool counted;
        bool from_right;
    };
    std::vector<char> filled(static_cast<std::size_t>(n), 0);
    std::vector<Token> tokens;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = initial[static_cast<std::size_t>(i)].active;
        if (k == 0)
            continue;
        filled[static_cast<std::size_t>(i)] = 1;
        for (std::uint32_t j = 1; j < k; ++j)
            tokens.push_back({i, false, i >= origin});
    }

    double t = 0.0;
    while (!tokens.empty()) {
        t += -std::log1p(-uniform01(engine)) / static_cast<double>(tokens.size());
        if (t > horizon)
            break;
        ++run.events;
        const auto idx = static_cast<std::size_t>(uniform_index(engine, tokens.size()));
        Token& tok = tokens[idx];
        const std::int64_t next = tok.pos + (uniform01(engine) < p ? 1 : -1);
        if (tok.pos == origin - 1 && next == origin) {
            ++run.trace.directed_crossings;
            if (!tok.counted) {
                tok.counted = true;
                run.trace.times.push_back(t);
                run.crossings_from_right += tok.from_right ? 1 : 0;
            }
        }
        if (next < 0 || next >= n || !filled[static_cast<std::size_t>(next)]) {
            if (next >= 0 && next < n)
                filled[static_cast<std::size_t>(next)] = 1;
            tokens[idx] = tokens.back();
            tokens.pop_back();
            continue;
        }
        tok.pos = next;
    }
}

// Every particle is tracked. A site holding two or more particles has all of
// them active; a lone particle is asleep and wakes when joined.
void run_arw_infinite(double p, const Configuration& initial, std::int64_t origin, double horizon,
                      SplitMix64& engine, FlowRun& run)
{
    constexpr std::size_t kAsleep = static_cast<std::size_t>(-1);
    const auto n = static_cast<std::int64_t>(initial.size());
    struct Particle {
        std::int64_t pos;
        std::size_t slot;   // index in `active`, or kAsleep
        bool counted;
        bool from_right;
    };
    std::vector<Particle> particles;
    std::vector<std::vector<std::uint32_t>> at(static_cast<std::size_t>(n));
    std::vector<std::uint32_t> active;

    auto wake = [&](std::uint32_t id) {
        if (particles[id].slot != kAsleep)
            return;
        particles[id].slot = active.size();
        active.push_back(id);
    };
    auto retire = [&](std::uint32_t id) {
        const std::size_t slot = particles[id].slot;
        particles[active.back()].slot = slot;
        active[slot] = active.back();
        active.pop_back();
        particles[id].slot = kAsleep;
    };

    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = initial[static_cast<std::size_t>(i)].active;
        for (std::uint32_t j = 0; j < k; ++j) {
            const auto id = static_cast<std::uint32_t>(particles.size());
            particles.push_back({i, kAsleep, false, i >= origin});
            at[static_cast<std::size_t>(i)].push_back(id);
            if (k >= 2)
                wake(id);
        }
    }

    double t = 0.0;
    while (!active.empty()) {
        t += -std::log1p(-uniform01(engine)) / static_cast<double>(active.size());
        if (t > horizon)
            break;
        ++run.events;
        const std::uint32_t id = active[static_cast<std::size_t>(uniform_index(engine, active.size()))];
        Particle& part = particles[id];
        const std::int64_t next = part.pos + (uniform01(engine) < p ? 1 : -1);
        if (part.pos == origin - 1 && next == origin) {
            ++run.trace.directed_crossings;
            if (!part.counted) {
                part.counted = true;
                run.trace.times.push_back(t);
                run.crossings_from_right += part.from_right ? 1 : 0;
            }
        }

        auto& here = at[static_cast<std::size_t>(part.pos)];
        here.erase(std::find(here.begin(), here.end(), id));
        if (here.size() == 1)
            retire(here.front());

        if (next < 0 || next >= n) {
            retire(id);
            continue;
        }
        part.pos = next;
        auto& there = at[static_cast<std::size_t>(next)];
        there.push_back(id);
        if (there.size() == 1)
            retire(id);
        else if (there.size() == 2)
            wake(there.front());
    }
}

} // namespace

FlowRun measure_flow(double p, const InitialLaw& law, const FlowWindow& window, double horizon, const SeedSpec& seed,
                     FlowModel model)
{
    if (!(p > 0.5 && p <= 1.0))
        throw std::invalid_argument("measure_flow: requires p > 1/2");
    if (window.left < 0 || window.right < 0)
        throw std::invalid_argument("measure_flow: window bounds must be >= 0");
    if (!(horizon >= 0.0))
        throw std::invalid_argument("measure_flow: horizon must be >= 0");

    const Box box = Box::interval(-window.left, window.right);
    const Configuration initial = sample_initial(law, box, seed);
    FlowRun run;
    run.window = window;
    run.window_warning = window_too_small(window, p, horizon);
    SplitMix64 engine{seed.stream(Purpose::Flow)};
    if (model == FlowModel::ParticleHole)
        run_particle_hole(p, initial, window.left, horizon, engine, run);
    else
        run_arw_infinite(p, initial, window.left, horizon, engine, run);
    return run;
}

std::vector<double> bm_max_reference(double t, std::size_t n, const SeedSpec& seed)
{
    if (n == 0)
        throw std::invalid_argument("bm_max_reference: n must be >= 1");
    if (!(t >= 0.0))
        throw std::invalid_argument("bm_max_reference: t must be >= 0");
    auto engine = seed.engine(Purpose::Reference);
    std::normal_distribution<double> gauss;
    const double scale = std::sqrt(t);
    std::vector<double> out(n);
    for (auto& x : out)
        x = scale * std::abs(gauss(engine));
    return out;
}

void validate_scaling_inputs(double p, const InitialLaw& law, std::size_t runs)
{
    if (!(p > 0.5 && p <= 1.0))
        throw std::invalid_argument("flow scaling requires p > 1/2 (positive drift v = 2p - 1)");
    if (law.kind() == InitialLaw::Kind::Deterministic || !(law.variance() > 0.0))
        throw std::invalid_argument("flow scaling: non-constant required (initial law must have sigma > 0)");
    if (std::abs(law.mean() - 1.0) > 1e-12)
        throw std::invalid_argument("flow scaling: initial law must have mean 1 (critical density)");
    if (runs < 100)
        throw std::invalid_argument("flow scaling: insufficient runs (need at least 100 per L)");
}

ScalingReport verify_scaling(double p, const InitialLaw& law, const std::vector<double>& times,
                             const std::vector<std::int64_t>& ladder, const SeedSpec& seed,
                             const ScalingOptions& options)
{
    validate_scaling_inputs(p, law, options.runs);
    if (times.empty() || ladder.empty())
        throw std::invalid_argument("flow scaling: need at least one time and one L");
    for (double t : times)
        if (!(t > 0.0) || !std::isfinite(t))
            throw std::invalid_argument("flow scaling: times must be positive");
    for (auto L : ladder)
        if (L < 1)
            throw std::invalid_argument("flow scaling: L must be >= 1");

    ScalingReport rep;
    rep.p = p;
    rep.v = 2.0 * p - 1.0;
    rep.sigma = std::sqrt(law.variance());
    rep.ladder = ladder;
    rep.times = times;
    const double t_max = *std::max_element(times.begin(), times.end());

    for (auto L : ladder) {
        const double scale = rep.sigma * static_cast<double>(L);
        const double horizon = static_cast<double>(L) * static_cast<double>(L) * t_max / rep.v;
        const auto window = default_window(p, horizon);
        const SeedSpec level = seed.child(static_cast<std::uint64_t>(L));
        const auto counts = parallel_map<std::vector<std::uint64_t>>(options.runs, options.workers, [&](std::size_t r) {
            const auto run = measure_flow(p, law, window, horizon, level.with_run(r), options.model);
            std::vector<std::uint64_t> c;
            for (double t : times)
                c.push_back(run.trace.count(static_cast<double>(L) * static_cast<double>(L) * t / rep.v));
            return c;
        });
        rep.window_warning = rep.window_warning || window_too_small(window, p, horizon);

        // Times are compared in increasing order for the per-run monotonicity check.
        std::vector<std::size_t> order(times.size());
        for (std::size_t k = 0; k < order.size(); ++k)
            order[k] = k;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
        for (const auto& c : counts)
            for (std::size_t k = 1; k < order.size(); ++k)
                if (c[order[k]] < c[order[k - 1]])
                    rep.monotone_in_t = false;

        for (std::size_t k = 0; k < times.size(); ++k) {
            ScalingCell cell;
            cell.L = L;
            cell.t = times[k];
            cell.samples.reserve(counts.size());
            for (const auto& c : counts)
                cell.samples.push_back(static_cast<double>(c[k]) / scale);
            const double root_t = std::sqrt(times[k]);
            cell.ks = stats::ks_distance(stats::EmpiricalCdf{cell.samples},
                                         [root_t](double x) { return stats::half_normal_cdf(x, root_t); });
            cell.mean = stats::mean(cell.samples);
            cell.expected_mean = root_t * std::sqrt(2.0 / std::numbers::pi);
            rep.cells.push_back(std::move(cell));
        }
    }

    const std::size_t nt = times.size();
    for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t l = 1; l < ladder.size(); ++l)
            if (!(rep.cell(l, k).ks < rep.cell(l - 1, k).ks))
                rep.ks_decreasing = false;
        const auto& last = rep.cell(ladder.size() - 1, k);
        if (!(last.ks < options.ks_threshold))
            rep.final_below_threshold = false;
        if (std::abs(last.mean - last.expected_mean) > options.mean_tolerance * last.expected_mean)
            rep.mean_ok = false;
    }
    rep.pass = rep.ks_decreasing && rep.final_below_threshold;
    return rep;
}

} // namespace arw::flow
