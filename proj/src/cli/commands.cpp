#include "arw/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "arw/abelian.hpp"
#include "arw/asym1d.hpp"
#include "arw/cli/output.hpp"
#include "arw/dynamics.hpp"
#include "arw/flow.hpp"
#include "arw/parallel.hpp"

#ifndef ARW_VERSION
#define ARW_VERSION "dev"
#endif

namespace arw::cli {

namespace {

constexpr const char* kSeedRule = "run r of campaign part k uses SeedSpec{master}.child(k).with_run(r)";

Json coord_json(const Coord& c, int dim)
{
    Json out = Json::array();
    for (int a = 0; a < dim; ++a)
        out.push_back(c[static_cast<std::size_t>(a)]);
    return out;
}

Box random_box(std::mt19937_64& engine, int dim, int max_side)
{
    Coord lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a)
        hi[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(uniform_index(engine, static_cast<std::uint64_t>(max_side)));
    return Box{dim, lo, hi};
}

Box random_sub_box(std::mt19937_64& engine, const Box& outer)
{
    Coord lo = outer.lo(), hi = outer.hi();
    for (int a = 0; a < outer.dim(); ++a) {
        const auto i = static_cast<std::size_t>(a);
        const auto span = static_cast<std::uint64_t>(outer.hi()[i] - outer.lo()[i] + 1);
        lo[i] = outer.lo()[i] + static_cast<std::int64_t>(uniform_index(engine, span));
        hi[i] = lo[i] + static_cast<std::int64_t>(uniform_index(engine, static_cast<std::uint64_t>(outer.hi()[i] - lo[i] + 1)));
    }
    return Box{outer.dim(), lo, hi};
}

Json model_json(const ModelParams& m)
{
    Json j{{"name", to_string(m.model)}, {"kernel", m.kernel.probs()}};
    if (m.model == Model::ARW)
        j["lambda"] = m.infinite_sleep_rate() ? Json("inf") : Json(m.sleep_rate);
    return j;
}

} // namespace

// ++ Abelian campaign ++++++++++++++++++++++++++++++++++++++++++++++++++++++++

std::vector<std::vector<ModelParams>> default_campaign_models(const std::vector<int>& dims)
{
    std::vector<std::vector<ModelParams>> out;
    for (int d : dims) {
        const auto k = JumpKernel::symmetric(d);
        out.push_back({ModelParams::arw(0.5, k), ModelParams::arw(1.0, k),
                       ModelParams::arw(std::numeric_limits<double>::infinity(), k), ModelParams::particle_hole(k)});
    }
    return out;
}

Json AbelianReport::to_json() const
{
    Json j{{"configurations", configurations},
           {"odometer_mismatches", mismatches},
           {"topplings", topplings},
           {"budget_exceeded", budget_exceeded},
           {"monotonicity_checked", monotone_checked},
           {"monotonicity_violations", monotone_violations},
           {"equivalence_checked", equivalence_checked},
           {"equivalence_mismatches", equivalence_mismatches},
           {"pass", ok()}};
    j["witness"] = witness ? *witness : Json(nullptr);
    return j;
}

AbelianReport run_abelian_campaign(const AbelianCampaign& c, const SeedSpec& seed, int workers)
{
    if (c.dims.empty() || c.models.size() != c.dims.size() || c.models.front().empty())
        throw std::invalid_argument("abelian campaign: need models for every dimension");
    if (c.orders < 2 || c.max_side < 1)
        throw std::invalid_argument("abelian campaign: need orders >= 2 and max_side >= 1");

    struct Outcome {
        bool ok = true;
        bool budget = false;
        std::uint64_t topplings = 0;
        std::optional<Json> witness;
    };
    AbelianReport report;
    auto fold = [&](const std::vector<Outcome>& outcomes, std::uint64_t& failures) {
        for (const auto& o : outcomes) {
            report.topplings += o.topplings;
            report.budget_exceeded += o.budget ? 1 : 0;
            if (!o.ok && !o.budget) {
                ++failures;
                if (!report.witness && o.witness)
                    report.witness = o.witness;
            }
        }
    };
    auto instance = [&](std::uint64_t part, std::size_t i) {
        const SeedSpec s = seed.child(part).with_run(i);
        auto engine = s.engine(Purpose::Campaign);
        const std::size_t di = i % c.dims.size();
        const int dim = c.dims[di];
        const auto& models = c.models[di];
        const ModelParams& params = models[(i / c.dims.size()) % models.size()];
        const Box window = random_box(engine, dim, c.max_side);
        Configuration config = sample_initial(c.law, window, s, c.cap);
        return std::tuple{s, std::move(engine), params, window, std::move(config)};
    };

    // Part 1: order independence.
    const auto part1 = parallel_map<Outcome>(c.configurations, workers, [&](std::size_t i) {
        auto [s, engine, params, window, config] = instance(1, i);
        abelian::InstructionTape tape{window, params, s.stream(Purpose::Tape),
                                      c.corrupt_tape ? abelian::TapeMode::SharedStream : abelian::TapeMode::SiteWise};
        const auto check = abelian::check_abelian(config, tape, window, c.orders, s.stream(Purpose::Order), false, c.budget);
        Outcome o{check.ok, check.budget_exceeded, check.topplings, std::nullopt};
        if (check.witness)
            o.witness = Json{{"part", "order-independence"},
                             {"instance", i},
                             {"lo", coord_json(window.lo(), window.dim())},
                             {"hi", coord_json(window.hi(), window.dim())},
                             {"model", model_json(params)},
                             {"counts", config.counts()},
                             {"odometer_a", check.witness->first.counts()},
                             {"odometer_b", check.witness->second.counts()}};
        return o;
    });
    report.configurations = c.configurations;
    fold(part1, report.mismatches);

    // Part 2: monotonicity along V1 in V2 in V3 = window.
    const auto part2 = parallel_map<Outcome>(c.monotone_configurations, workers, [&](std::size_t i) {
        auto [s, engine, params, window, config] = instance(2, i);
        const Box v2 = random_sub_box(engine, window);
        const Box v1 = random_sub_box(engine, v2);
        const abelian::InstructionTape tape{window, params, s.stream(Purpose::Tape)};
        Outcome o;
        for (const auto& [inner, outer] : {std::pair{v1, v2}, std::pair{v2, window}}) {
            const auto m = abelian::check_monotonicity(config, tape, inner, outer);
            o.topplings += m.outer.total();
            if (!m.ok && o.ok) {
                o.ok = false;
                o.witness = Json{{"part", "monotonicity"},
                                 {"instance", i},
                                 {"inner_lo", coord_json(inner.lo(), inner.dim())},
                                 {"inner_hi", coord_json(inner.hi(), inner.dim())},
                                 {"outer_lo", coord_json(outer.lo(), outer.dim())},
                                 {"outer_hi", coord_json(outer.hi(), outer.dim())},
                                 {"counts", config.counts()},
                                 {"odometer_inner", m.inner.counts()},
                                 {"odometer_outer", m.outer.counts()}};
            }
        }
        return o;
    });
    report.monotone_checked = c.monotone_configurations;
    fold(part2, report.monotone_violations);

    // Part 3: ARW with lambda = inf against the particle-hole model.
    const auto part3 = parallel_map<Outcome>(c.equivalence_configurations, workers, [&](std::size_t i) {
        auto [s, engine, params, window, config] = instance(3, i);
        const auto arw = ModelParams::arw(std::numeric_limits<double>::infinity(), JumpKernel::symmetric(window.dim()));
        const auto e = abelian::equivalence_arw_ph(config, arw, window, s.stream(Purpose::Tape));
        Outcome o{e.equal, false, e.arw.total(), std::nullopt};
        if (!e.equal)
            o.witness = Json{{"part", "arw-particle-hole"},
                             {"instance", i},
                             {"counts", config.counts()},
                             {"odometer_arw", e.arw.counts()},
                             {"odometer_particle_hole", e.particle_hole.counts()}};
        return o;
    });
    report.equivalence_checked = c.equivalence_configurations;
    fold(part3, report.equivalence_mismatches);
    return report;
}

namespace {

// ++ Commands ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct Context {
    RunSettings settings;
    std::string hash;
    std::ostream& log;
    std::uint64_t runs = 0;   ///< for the manifest
};

int cmd_abelian_check(Section& root, Context& ctx, OutputSet& out)
{
    AbelianCampaign c;
    auto camp = root.child("campaign");
    c.configurations = camp.unsigned_integer("configurations", c.configurations);
    c.orders = static_cast<int>(camp.integer("orders", c.orders));
    if (camp.has("dims"))
        c.dims.clear();
    if (camp.has("dims"))
        for (auto d : camp.integers("dims")) {
            if (d < 1 || d > kMaxDim)
                camp.fail("dims", "each dimension must be in [1, 3]");
            c.dims.push_back(static_cast<int>(d));
        }
    if (c.dims.empty())
        camp.fail("dims", "need at least one dimension");
    c.max_side = static_cast<int>(camp.integer("max_side", c.max_side));
    if (c.max_side < 1)
        camp.fail("max_side", "must be >= 1");
    if (camp.has("cap")) {
        const auto cap = camp.integer("cap");
        if (cap < 0)
            camp.fail("cap", "must be >= 0");
        c.cap = static_cast<std::uint32_t>(cap);
    }
    if (c.orders < 2)
        camp.fail("orders", "must be >= 2");
    c.monotone_configurations = camp.unsigned_integer("monotonicity_configurations", c.monotone_configurations);
    c.equivalence_configurations = camp.unsigned_integer("equivalence_configurations", c.equivalence_configurations);
    c.budget = camp.unsigned_integer("budget", c.budget);
    c.corrupt_tape = camp.boolean("inject_bug", false);
    if (camp.has("law"))
        c.law = read_law(camp.child("law"));
    if (camp.has("models")) {
        const auto& list = camp.raw("models");
        if (!list.is_array() || list.empty())
            camp.fail("models", "expected a nonempty list of models");
        for (int d : c.dims) {
            std::vector<ModelParams> per_dim;
            for (std::size_t k = 0; k < list.size(); ++k)
                per_dim.push_back(read_model(Section{list[k], camp.path() + ".models[" + std::to_string(k) + "]"}, d));
            c.models.push_back(std::move(per_dim));
        }
    } else {
        c.models = default_campaign_models(c.dims);
    }
    camp.finish();
    root.finish();

    ctx.runs = c.configurations + c.monotone_configurations + c.equivalence_configurations;
    const auto report = run_abelian_campaign(c, SeedSpec{ctx.settings.master_seed, 0}, ctx.settings.workers);
    Json j = report.to_json();
    j["orders"] = c.orders;
    j["inject_bug"] = c.corrupt_tape;
    out.report("abelian_check", j);

    ctx.log << "abelian-check: " << report.configurations << " configurations x " << c.orders << " orders, "
            << report.mismatches << " mismatches; monotonicity " << report.monotone_violations << "/"
            << report.monotone_checked << " violations; arw/particle-hole " << report.equivalence_mismatches << "/"
            << report.equivalence_checked << " mismatches; " << report.topplings << " topplings\n";
    if (report.witness)
        ctx.log << "witness: " << report.witness->dump() << "\n";
    if (report.budget_exceeded > 0 && report.mismatches + report.monotone_violations + report.equivalence_mismatches == 0)
        return kBudgetExceeded;
    return report.ok() ? kPass : kViolation;
}

int cmd_critical_scan(Section& root, Context& ctx, OutputSet& out)
{
    const auto lambdas = root.rates("lambdas");
    const auto grid = root.grid("mu_grid");
    asym1d::ScanOptions opts;
    if (root.has("ladder"))
        opts.ladder = root.integers("ladder");
    opts.seeds = root.unsigned_integer("seeds_per_point", opts.seeds);
    opts.workers = ctx.settings.workers;
    double tolerance = 0.04, linear_min = 0.99;
    bool evidence = true;
    if (root.has("thresholds")) {
        auto th = root.child("thresholds");
        opts.thresholds.tight_slope = th.number("tight_slope", opts.thresholds.tight_slope);
        opts.thresholds.linear_slope = th.number("linear_slope", opts.thresholds.linear_slope);
        tolerance = th.number("transition_tolerance", tolerance);
        linear_min = th.number("linear_fraction_min", linear_min);
        th.finish();
    }
    evidence = root.boolean("evidence", evidence);
    root.finish();

    for (double l : lambdas)
        if (!(l > 0.0))
            throw ConfigError("lambdas: each sleep rate must be > 0");
    for (double mu : grid)
        if (!(mu >= 0.0 && mu <= 1.0))
            throw ConfigError("mu_grid: densities must lie in [0, 1]");
    if (opts.ladder.size() < 2)
        throw ConfigError("ladder: need at least two values of L");
    for (std::size_t k = 0; k < opts.ladder.size(); ++k)
        if (opts.ladder[k] < 1 || (k > 0 && opts.ladder[k] <= opts.ladder[k - 1]))
            throw ConfigError("ladder: values must be >= 1 and increasing");
    if (opts.seeds == 0)
        throw ConfigError("seeds_per_point: must be >= 1");
    if (!(opts.thresholds.tight_slope < opts.thresholds.linear_slope))
        throw ConfigError("thresholds: need tight_slope < linear_slope");

    std::vector<std::string> columns{"lambda", "mu", "mu_c", "drift", "classification", "slope"};
    for (auto L : opts.ladder)
        columns.push_back("median_N_L" + std::to_string(L));
    for (const char* c : {"mean_N", "q10_N", "q90_N", "linear_fraction"})
        columns.emplace_back(c);
    Table table{columns};
    auto add_row = [&](const asym1d::RegimeReport& r) {
        std::vector<Cell> row{r.lambda, r.mu, asym1d::mu_c_exact(r.lambda), r.drift, asym1d::to_string(r.regime), r.slope};
        for (double m : r.median_flux)
            row.emplace_back(m);
        for (double v : {r.mean_flux, r.q10, r.q90, r.linear_fraction})
            row.emplace_back(v);
        table.add(std::move(row));
    };

    bool ok = true;
    Json summary = Json::array();
    const SeedSpec base{ctx.settings.master_seed, 0};
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const double lambda = lambdas[li];
        const double mu_c = asym1d::mu_c_exact(lambda);
        const SeedSpec seed = base.child(li);
        const auto reports = asym1d::critical_scan(lambda, grid, seed, opts);
        for (const auto& r : reports)
            add_row(r);
        ctx.runs += reports.size() * opts.seeds;

        const double tp = asym1d::transition_point(reports);
        Json s{{"lambda", std::isinf(lambda) ? Json("inf") : Json(lambda)}, {"mu_c", mu_c}};
        s["transition_point"] = std::isnan(tp) ? Json(nullptr) : Json(tp);
        const bool within = !std::isnan(tp) && std::abs(tp - mu_c) <= tolerance;
        s["within_tolerance"] = within;
        ok = ok && within;

        std::vector<double> drift_sign_changes;
        for (std::size_t k = 1; k < reports.size(); ++k)
            if ((reports[k - 1].drift < 0.0) != (reports[k].drift < 0.0))
                drift_sign_changes.push_back(reports[k].mu);
        s["drift_sign_change_at"] = drift_sign_changes;

        if (evidence) {
            Json ev = Json::object();
            if (mu_c + 0.2 <= 1.0) {
                const auto hi = asym1d::critical_scan(lambda, {mu_c + 0.2}, seed.child(1), opts).front();
                add_row(hi);
                const bool pass = hi.linear_fraction >= linear_min;
                ev["supercritical"] = Json{{"mu", hi.mu}, {"linear_fraction", hi.linear_fraction}, {"pass", pass}};
                ok = ok && pass;
                ctx.runs += opts.seeds;
            }
            if (mu_c - 0.2 >= 0.0) {
                const auto lo = asym1d::critical_scan(lambda, {mu_c - 0.2}, seed.child(2), opts).front();
                add_row(lo);
                const bool pass = lo.regime == asym1d::Regime::Fixation;
                ev["subcritical"] = Json{{"mu", lo.mu}, {"median_flux", lo.median_flux}, {"slope", lo.slope}, {"pass", pass}};
                ok = ok && pass;
                ctx.runs += opts.seeds;
            }
            s["evidence"] = ev;
        }
        summary.push_back(s);
        ctx.log << "critical-scan: lambda=" << lambda << " mu_c=" << mu_c << " transition=" << tp
                << (within ? " (within tolerance)" : " (OUTSIDE tolerance)") << "\n";
    }
    out.table("critical_scan", table);
    out.report("critical_scan_summary", Json{{"tolerance", tolerance}, {"lambdas", summary}, {"pass", ok}});
    return ok ? kPass : kViolation;
}

int cmd_flow_scaling(Section& root, Context& ctx, OutputSet& out)
{
    const double p = root.number("p");
    const auto law = read_law(root.child("law"));
    const auto times = root.has("times") ? root.numbers("times") : std::vector<double>{1.0};
    const auto ladder = root.integers("ladder");
    flow::ScalingOptions opts;
    const auto runs = root.integer("runs_per_L");
    if (runs < 0)
        root.fail("runs_per_L", "must be >= 0");
    opts.runs = static_cast<std::size_t>(runs);
    opts.workers = ctx.settings.workers;
    const auto model = root.string("model", "particle-hole");
    if (model == "arw-inf")
        opts.model = flow::FlowModel::ArwInfiniteSleep;
    else if (model != "particle-hole")
        root.fail("model", "expected \"particle-hole\" or \"arw-inf\"");
    // The half-normal limit is only claimed for the particle-hole model; the
    // ARW run is reported against the same reference without a verdict.
    const bool exploratory = opts.model == flow::FlowModel::ArwInfiniteSleep;
    if (root.has("thresholds")) {
        auto th = root.child("thresholds");
        opts.ks_threshold = th.number("ks_final", opts.ks_threshold);
        opts.mean_tolerance = th.number("mean_tolerance", opts.mean_tolerance);
        th.finish();
    }
    root.finish();
    try {
        flow::validate_scaling_inputs(p, law, opts.runs);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    for (double t : times)
        if (!(t > 0.0))
            throw ConfigError("times: must be positive");
    for (auto L : ladder)
        if (L < 1)
            throw ConfigError("ladder: L must be >= 1");

    ctx.runs = opts.runs * ladder.size();
    const auto rep = flow::verify_scaling(p, law, times, ladder, SeedSpec{ctx.settings.master_seed, 0}, opts);

    Json cells = Json::array();
    Table cdf{{"L", "t", "x", "empirical_cdf", "half_normal_cdf"}};
    Table samples{{"L", "t", "run", "rescaled_flux"}};
    for (const auto& cell : rep.cells) {
        cells.push_back(Json{{"L", cell.L},
                             {"t", cell.t},
                             {"ks", cell.ks},
                             {"mean", cell.mean},
                             {"expected_mean", cell.expected_mean},
                             {"runs", cell.samples.size()}});
        const stats::EmpiricalCdf ecdf{cell.samples};
        const auto xs = ecdf.values();
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (i + 1 == xs.size() || xs[i + 1] != xs[i])
                cdf.add({cell.L, cell.t, xs[i], ecdf(xs[i]), stats::half_normal_cdf(xs[i], std::sqrt(cell.t))});
        for (std::size_t r = 0; r < cell.samples.size(); ++r)
            samples.add({cell.L, cell.t, static_cast<std::uint64_t>(r), cell.samples[r]});
        ctx.log << "flow-scaling: L=" << cell.L << " t=" << cell.t << " KS=" << cell.ks << " mean=" << cell.mean
                << " (half-normal " << cell.expected_mean << ")\n";
    }
    out.table("flow_cdf", cdf);
    out.table("flow_samples", samples);
    const char* verdict = exploratory ? "EXPLORATORY" : rep.pass ? "PASS" : "FAIL";
    out.report("flow_scaling", Json{{"model", model},
                                    {"p", rep.p},
                                    {"v", rep.v},
                                    {"sigma", rep.sigma},
                                    {"ladder", rep.ladder},
                                    {"times", rep.times},
                                    {"runs_per_L", opts.runs},
                                    {"ks_threshold", opts.ks_threshold},
                                    {"mean_tolerance", opts.mean_tolerance},
                                    {"cells", cells},
                                    {"ks_decreasing", rep.ks_decreasing},
                                    {"final_below_threshold", rep.final_below_threshold},
                                    {"mean_ok", rep.mean_ok},
                                    {"monotone_in_t", rep.monotone_in_t},
                                    {"window_warning", rep.window_warning},
                                    {"verdict", verdict}});
    ctx.log << "flow-scaling: verdict " << verdict << "\n";
    return (rep.pass || exploratory) && rep.monotone_in_t ? kPass : kViolation;
}

int cmd_fixation_probe(Section& root, Context& ctx, OutputSet& out)
{
    const int dim = static_cast<int>(root.integer("dim", 1));
    if (dim < 1 || dim > kMaxDim)
        root.fail("dim", "must be in [1, 3]");
    const auto params = read_model(root.child("model"), dim);
    const auto densities = root.numbers("densities");
    const auto radius = root.integer("window_radius");
    const auto probe_radius = root.integer("probe_radius", 0);
    const double horizon = root.number("horizon");
    const auto runs = root.unsigned_integer("runs", 100);
    const double tail = root.number("tail_fraction", 0.5);
    const auto budget = root.unsigned_integer("event_budget", dynamics::kDefaultEventBudget);
    if (radius < 0 || probe_radius < 0 || probe_radius > radius)
        root.fail("probe_radius", "need 0 <= probe_radius <= window_radius");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        root.fail("horizon", "must be finite and > 0");
    if (!(tail > 0.0 && tail <= 1.0))
        root.fail("tail_fraction", "must lie in (0, 1]");
    for (double mu : densities)
        if (!(mu >= 0.0 && mu <= stats::kMaxPoissonMean))
            root.fail("densities", "each density must lie in [0, 30]");

    struct Check {
        double mu;
        std::optional<double> max_fraction, min_fraction;
    };
    std::vector<Check> checks;
    if (root.has("checks")) {
        const auto& list = root.raw("checks");
        if (!list.is_array())
            root.fail("checks", "expected a list");
        for (std::size_t k = 0; k < list.size(); ++k) {
            Section s{list[k], root.path() + ".checks[" + std::to_string(k) + "]"};
            Check c{s.number("mu"), std::nullopt, std::nullopt};
            if (s.has("max_fraction"))
                c.max_fraction = s.number("max_fraction");
            if (s.has("min_fraction"))
                c.min_fraction = s.number("min_fraction");
            s.finish();
            if (std::find(densities.begin(), densities.end(), c.mu) == densities.end())
                s.fail("mu", "not one of the configured densities");
            checks.push_back(c);
        }
    }
    std::vector<double> growth_densities;
    std::vector<std::int64_t> growth_radii;
    std::uint64_t growth_runs = 0;
    if (root.has("growth")) {
        auto g = root.child("growth");
        growth_densities = g.numbers("densities");
        growth_radii = g.integers("radii");
        growth_runs = g.unsigned_integer("runs", 10);
        g.finish();
        for (std::size_t k = 0; k < growth_radii.size(); ++k)
            if (growth_radii[k] < 0 || (k > 0 && growth_radii[k] <= growth_radii[k - 1]))
                throw ConfigError("growth.radii: must be nonnegative and increasing");
    }
    root.finish();

    const Box window = Box::centered(dim, radius);
    const Box probe = Box::centered(dim, probe_radius);
    const SeedSpec base{ctx.settings.master_seed, 0};

    Table summary{{"mu", "lambda", "model", "dim", "window_radius", "horizon", "runs", "fraction_still_active",
                   "mean_last_activity", "truncated_runs"}};
    Table decay{{"mu", "time", "mean_active_density", "fraction_probe_active"}};
    Json check_results = Json::array();
    bool ok = true;
    bool truncated_any = false;
    std::map<double, double> fraction_by_mu;

    for (std::size_t di = 0; di < densities.size(); ++di) {
        const double mu = densities[di];
        const auto law = InitialLaw::poisson(mu);
        const SeedSpec seed = base.child(di);
        const auto recs = parallel_map<dynamics::FixationRecord>(runs, ctx.settings.workers, [&](std::size_t r) {
            return dynamics::fixation_probe(params, law, window, probe, horizon, seed.with_run(r), tail, budget);
        });
        ctx.runs += runs;
        std::uint64_t still = 0, truncated = 0;
        double last = 0.0;
        for (const auto& rec : recs) {
            still += rec.still_active ? 1 : 0;
            truncated += rec.truncated ? 1 : 0;
            last += rec.last_activity_time;
        }
        truncated_any = truncated_any || truncated > 0;
        const double fraction = runs ? static_cast<double>(still) / static_cast<double>(runs) : 0.0;
        fraction_by_mu[mu] = fraction;
        summary.add({mu, params.sleep_rate, to_string(params.model), static_cast<std::int64_t>(dim), radius, horizon,
                     runs, fraction, runs ? last / static_cast<double>(runs) : 0.0, truncated});

        if (!recs.empty()) {
            const auto& times = recs.front().series.records;
            for (std::size_t k = 0; k < times.size(); ++k) {
                double active = 0.0;
                std::uint64_t probe_active = 0, n = 0;
                for (const auto& rec : recs) {
                    const auto& rs = rec.series.records;
                    if (k < rs.size() && rs[k].time == times[k].time) {
                        active += rs[k].density.active_density();
                        probe_active += rs[k].probe_active ? 1 : 0;
                        ++n;
                    }
                }
                if (n > 0)
                    decay.add({mu, times[k].time, active / static_cast<double>(n),
                               static_cast<double>(probe_active) / static_cast<double>(n)});
            }
        }
        ctx.log << "fixation-probe: mu=" << mu << " fraction_still_active=" << fraction << "\n";
    }

    for (const auto& c : checks) {
        const double f = fraction_by_mu.at(c.mu);
        bool pass = true;
        if (c.max_fraction)
            pass = pass && f <= *c.max_fraction;
        if (c.min_fraction)
            pass = pass && f >= *c.min_fraction;
        Json j{{"mu", c.mu}, {"fraction_still_active", f}, {"pass", pass}};
        if (c.max_fraction)
            j["max_fraction"] = *c.max_fraction;
        if (c.min_fraction)
            j["min_fraction"] = *c.min_fraction;
        check_results.push_back(j);
        ok = ok && pass;
    }

    Json growth = Json::array();
    if (!growth_radii.empty()) {
        Table gt{{"mu", "radius", "mean_origin_odometer", "runs_computed", "runs"}};
        for (std::size_t gi = 0; gi < growth_densities.size(); ++gi) {
            const double mu = growth_densities[gi];
            const auto law = InitialLaw::poisson(mu);
            const SeedSpec seed = base.child(1000 + gi);
            abelian::GrowthOptions gopts;
            gopts.dim = dim;
            gopts.stabilize.budget = budget;
            const auto points = parallel_map<std::vector<abelian::GrowthPoint>>(
                growth_runs, ctx.settings.workers,
                [&](std::size_t r) { return abelian::odometer_growth(law, params, growth_radii, seed.with_run(r), gopts); });
            ctx.runs += growth_runs;
            std::vector<double> means;
            for (std::size_t k = 0; k < growth_radii.size(); ++k) {
                double sum = 0.0;
                std::uint64_t n = 0;
                for (const auto& run : points)
                    if (run[k].computed) {
                        sum += static_cast<double>(run[k].origin_odometer);
                        ++n;
                    }
                truncated_any = truncated_any || n < growth_runs;
                means.push_back(n ? sum / static_cast<double>(n) : 0.0);
                gt.add({mu, growth_radii[k], means.back(), n, growth_runs});
            }
            // One configuration and one tape per run, so each run's odometer
            // at the origin is nondecreasing in the radius.
            bool nondecreasing = true;
            for (const auto& run : points) {
                std::uint64_t previous = 0;
                for (const auto& pt : run) {
                    if (!pt.computed)
                        continue;
                    nondecreasing = nondecreasing && pt.origin_odometer >= previous;
                    previous = pt.origin_odometer;
                }
            }
            ok = ok && nondecreasing;
            growth.push_back(Json{{"mu", mu}, {"radii", growth_radii}, {"mean_origin_odometer", means},
                                  {"nondecreasing", nondecreasing}});
        }
        out.table("fixation_growth", gt);
    }

    out.table("fixation_probe", summary);
    out.table("fixation_decay", decay);
    out.report("fixation_probe_summary", Json{{"checks", check_results},
                                              {"growth", growth},
                                              {"tail_fraction", tail},
                                              {"truncated", truncated_any},
                                              {"pass", ok}});
    if (!ok)
        return kViolation;
    return truncated_any ? kBudgetExceeded : kPass;
}

int cmd_simulate(Section& root, Context& ctx, OutputSet& out)
{
    const int dim = static_cast<int>(root.integer("dim", 1));
    if (dim < 1 || dim > kMaxDim)
        root.fail("dim", "must be in [1, 3]");
    const auto params = read_model(root.child("model"), dim);
    const auto law = read_law(root.child("law"));
    const auto radius = root.integer("window_radius");
    const double horizon = root.rate("horizon");
    dynamics::SimulateOptions opts;
    if (root.has("probe_radius")) {
        const auto pr = root.integer("probe_radius");
        if (pr < 0 || pr > radius)
            root.fail("probe_radius", "need 0 <= probe_radius <= window_radius");
        opts.probe = Box::centered(dim, pr);
    }
    opts.first_sample = root.number("first_sample", opts.first_sample);
    opts.sample_ratio = root.number("sample_ratio", opts.sample_ratio);
    opts.event_budget = root.unsigned_integer("event_budget", opts.event_budget);
    if (root.has("cap"))
        opts.cap = static_cast<std::uint32_t>(root.integer("cap"));
    root.finish();
    if (radius < 0)
        throw ConfigError("window_radius: must be >= 0");
    if (!(horizon > 0.0))
        throw ConfigError("horizon: must be > 0");
    if (!(opts.first_sample > 0.0) || !(opts.sample_ratio > 1.0))
        throw ConfigError("sampling: need first_sample > 0 and sample_ratio > 1");

    ctx.runs = 1;
    const auto res = dynamics::simulate(params, law, Box::centered(dim, radius), horizon,
                                        SeedSpec{ctx.settings.master_seed, 0}, opts);
    Table series{{"time", "active_density", "sleeping_density", "settled_density", "unfilled_hole_density",
                  "settled_particles", "filled_holes", "probe_active", "events"}};
    for (const auto& r : res.series.records)
        series.add({r.time, r.density.active_density(), r.density.sleeping_density(), r.density.settled_density(),
                    r.density.unfilled_hole_density(), r.settled_particles, r.filled_holes, r.probe_active, r.events});
    out.table("simulate_series", series);
    const auto& cfg = res.final_config;
    out.report("simulate_summary", Json{{"events", res.events},
                                        {"end_time", res.end_time},
                                        {"truncated", res.truncated},
                                        {"absorbed", res.absorbed},
                                        {"particles", cfg.total_particles()},
                                        {"exited", cfg.exited_total()},
                                        {"origin_odometer", res.odometer.at(Coord{0, 0, 0})},
                                        {"warnings", res.warnings}});
    for (const auto& w : res.warnings)
        ctx.log << "warning: " << w << "\n";
    ctx.log << "simulate: " << res.events << " events up to t=" << res.end_time << "\n";
    return res.truncated ? kBudgetExceeded : kPass;
}

} // namespace

int run_experiment(const Json& config, std::ostream& log, std::ostream& err)
{
    const auto started = std::chrono::steady_clock::now();
    try {
        Section root{config, "config"};
        Context ctx{read_settings(root), manifest_hash(config, ARW_VERSION), log};
        OutputSet out{ctx.settings.out, ctx.hash, ctx.settings.format};

        int code = kPass;
        const auto& name = ctx.settings.experiment;
        if (name == "abelian-check")
            code = cmd_abelian_check(root, ctx, out);
        else if (name == "critical-scan")
            code = cmd_critical_scan(root, ctx, out);
        else if (name == "flow-scaling")
            code = cmd_flow_scaling(root, ctx, out);
        else if (name == "fixation-probe")
            code = cmd_fixation_probe(root, ctx, out);
        else if (name == "simulate")
            code = cmd_simulate(root, ctx, out);
        else
            throw ConfigError("config.experiment: unknown experiment '" + name + "'");

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.finish(Json{{"experiment", name},
                        {"version", ARW_VERSION},
                        {"config_hash", sha256_hex(config.dump())},
                        {"master_seed", ctx.settings.master_seed},
                        {"seed_rule", kSeedRule},
                        {"runs", ctx.runs},
                        {"workers", ctx.settings.workers},
                        {"wall_clock_seconds", wall},
                        {"exit_code", code}});
        return code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    }
}

int run_main(int argc, char** argv)
{
    CLI::App app{"Activated random walk experiments"};
    app.require_subcommand(1);
    std::string config_path;
    Overrides overrides;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out_dir, format;

    for (const char* name : {"abelian-check", "critical-scan", "flow-scaling", "fixation-probe", "simulate"}) {
        auto* sub = app.add_subcommand(name, std::string{"run the "} + name + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfigError;
    }

    const auto* sub = app.get_subcommands().front();
    if (sub->count("--seed"))
        overrides.seed = seed;
    if (sub->count("--workers"))
        overrides.workers = workers;
    if (sub->count("--out"))
        overrides.out = out_dir;
    if (sub->count("--format"))
        overrides.format = format;

    Json config;
    try {
        config = load_config(config_path, overrides);
        if (!config.contains("experiment"))
            config["experiment"] = sub->get_name();
        else if (config["experiment"] != sub->get_name())
            throw ConfigError("config.experiment is " + config["experiment"].dump() + " but the subcommand is '" +
                              sub->get_name() + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    try {
        return run_experiment(config, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kViolation;
    }
}

} // namespace arw::cli
