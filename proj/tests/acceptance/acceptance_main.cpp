// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Experiments with a CLI command run through it, using the
// configs shipped in the repository; the rest call the library directly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "arw/asym1d.hpp"
#include "arw/cli/commands.hpp"
#include "arw/cli/config.hpp"
#include "arw/cli/output.hpp"
#include "arw/dynamics.hpp"
#include "arw/flow.hpp"
#include "arw/stats.hpp"

namespace fs = std::filesystem;
using namespace arw;
using cli::Json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMasterSeed = 20240610;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double x, int digits = 4)
{
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v, double seconds, double limit)
{
    const bool in_time = seconds < limit;
    const bool ok = v.pass && in_time;
    if (!ok)
        ++failures;
    std::string detail = v.detail;
    if (!in_time)
        detail += "; runtime " + fixed(seconds) + " s exceeds " + fixed(limit) + " s";
    std::printf("C%-2d %s  %s: %s (%.1f s)\n", id, ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in{p, std::ios::binary};
    return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

struct CliRun {
    int code = 0;
    double seconds = 0.0;
    fs::path dir;
    Json manifest;
    std::string err;
};

// Runs the experiment of a shipped config into `dir`.
CliRun run_cli(const std::string& config_name, const fs::path& dir, int workers = 1)
{
    fs::remove_all(dir);
    cli::Overrides ov;
    ov.out = dir.string();
    ov.workers = workers;
    const auto config = cli::load_config(fs::path{ARW_CONFIG_DIR} / config_name, ov);
    std::ostringstream log, err;
    const auto start = Clock::now();
    CliRun r;
    r.code = cli::run_experiment(config, log, err);
    r.seconds = seconds_since(start);
    r.dir = dir;
    r.err = err.str();
    if (fs::exists(dir / "manifest.json"))
        r.manifest = Json::parse(slurp(dir / "manifest.json"));
    return r;
}

Json read_json(const fs::path& p)
{
    return Json::parse(slurp(p));
}

// ++ Criteria 1-3: toppling properties (abelian-check command) +++++++++++++++

void criteria_1_to_3(const fs::path& root, std::vector<std::pair<std::string, CliRun>>& runs)
{
    const auto run = run_cli("abelian_check.json", root / "abelian_check");
    runs.emplace_back("abelian_check.json", run);
    const auto rep = read_json(run.dir / "abelian_check.json");
    const auto n = rep["configurations"].get<std::uint64_t>();
    const auto mism = rep["odometer_mismatches"].get<std::uint64_t>();
    const auto budget = rep["budget_exceeded"].get<std::uint64_t>();
    report(1, "abelian property",
           {n == 1000 && mism == 0 && budget == 0,
            std::to_string(mism) + " odometer mismatches over " + std::to_string(n) + " configurations x 5 orders, " +
                std::to_string(rep["topplings"].get<std::uint64_t>()) + " topplings"},
           run.seconds, 60.0);

    const auto mono_n = rep["monotonicity_checked"].get<std::uint64_t>();
    const auto mono_v = rep["monotonicity_violations"].get<std::uint64_t>();
    report(2, "monotonicity",
           {mono_n == 500 && mono_v == 0,
            std::to_string(mono_v) + " violations over " + std::to_string(mono_n) + " nested box triples"},
           run.seconds, 60.0);

    const auto eq_n = rep["equivalence_checked"].get<std::uint64_t>();
    const auto eq_m = rep["equivalence_mismatches"].get<std::uint64_t>();
    report(3, "ARW lambda=inf vs particle-hole odometers",
           {eq_n == 500 && eq_m == 0,
            std::to_string(eq_m) + " mismatches over " + std::to_string(eq_n) + " instances"},
           run.seconds, 60.0);
}

// ++ Criterion 4: critical density (critical-scan command) +++++++++++++++++++

void criterion_4(const fs::path& root, std::vector<std::pair<std::string, CliRun>>& runs)
{
    const auto run = run_cli("critical_scan.json", root / "critical_scan");
    runs.emplace_back("critical_scan.json", run);
    const auto rep = read_json(run.dir / "critical_scan_summary.json");
    bool ok = run.code == cli::kPass && rep["pass"].get<bool>();
    std::string detail;
    for (const auto& l : rep["lambdas"]) {
        const bool sub = l["evidence"]["subcritical"]["pass"].get<bool>();
        const bool sup = l["evidence"]["supercritical"]["pass"].get<bool>();
        const bool within = l["within_tolerance"].get<bool>();
        ok = ok && sub && sup && within;
        if (!detail.empty())
            detail += "; ";
        detail += "lambda=" + fixed(l["lambda"].get<double>()) + " transition " +
                  fixed(l["transition_point"].get<double>()) + " vs " + fixed(l["mu_c"].get<double>()) +
                  ", P[N>=drift L/2]=" + fixed(l["evidence"]["supercritical"]["linear_fraction"].get<double>()) +
                  ", subcritical slope " + fixed(l["evidence"]["subcritical"]["slope"].get<double>());
    }
    report(4, "critical density", {ok, detail}, run.seconds, 300.0);
}

// ++ Criterion 5: square-root growth at criticality +++++++++++++++++++++++++++

// Plain reflected walk with library-independent draws: Poisson particles and
// a Bernoulli(lambda / (1 + lambda)) sleep per site.
std::uint64_t brute_reflected(std::int64_t L, double lambda, double mu, std::mt19937_64& gen)
{
    std::poisson_distribution<std::uint64_t> eta{mu};
    std::bernoulli_distribution y{lambda / (1.0 + lambda)};
    std::uint64_t n = 0;
    for (std::int64_t i = 0; i <= L; ++i) {
        const std::uint64_t up = n + eta(gen);
        const std::uint64_t sleep = y(gen) ? 1 : 0;
        n = up > sleep ? up - sleep : 0;
    }
    return n;
}

double log_slope(const std::vector<std::int64_t>& ladder, const std::vector<double>& medians)
{
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        lx.push_back(std::log(static_cast<double>(ladder[k])));
        ly.push_back(std::log(medians[k]));
    }
    return stats::ols_slope(lx, ly);
}

void criterion_5()
{
    const auto start = Clock::now();
    const double lambda = 1.0;
    const double mu = asym1d::mu_c_exact(lambda);
    const auto law = InitialLaw::poisson(mu);
    const std::vector<std::int64_t> ladder{1'000, 10'000, 100'000, 1'000'000};
    const std::size_t seeds = 1000;
    const SeedSpec seed = SeedSpec{kMasterSeed}.child(5);

    std::vector<std::vector<double>> flux(ladder.size());
    for (std::size_t r = 0; r < seeds; ++r) {
        const auto f = asym1d::reflected_flux(ladder, lambda, law, seed.with_run(r));
        for (std::size_t k = 0; k < ladder.size(); ++k)
            flux[k].push_back(static_cast<double>(f[k]));
    }
    std::vector<double> medians;
    for (const auto& f : flux)
        medians.push_back(stats::median(f));
    bool increasing = true;
    for (std::size_t k = 1; k < medians.size(); ++k)
        increasing = increasing && medians[k] > medians[k - 1];
    const double slope = log_slope(ladder, medians);

    // Brute force on the first three levels; two-sample KS at level 0.001.
    const std::vector<std::int64_t> brute_ladder{1'000, 10'000, 100'000};
    std::mt19937_64 gen{kMasterSeed + 5};
    std::vector<double> brute_medians;
    double worst_ks = 0.0;
    for (std::size_t k = 0; k < brute_ladder.size(); ++k) {
        std::vector<double> b;
        for (std::size_t r = 0; r < seeds; ++r)
            b.push_back(static_cast<double>(brute_reflected(brute_ladder[k], lambda, mu, gen)));
        brute_medians.push_back(stats::median(b));
        worst_ks = std::max(worst_ks, stats::ks_two_sample(stats::EmpiricalCdf{b}, stats::EmpiricalCdf{flux[k]}));
    }
    const double ks_bound = 1.95 * std::sqrt(2.0 / static_cast<double>(seeds));
    const double brute_slope = log_slope(brute_ladder, brute_medians);

    std::string med;
    for (double m : medians)
        med += (med.empty() ? "" : ", ") + fixed(m, 6);
    const bool ok = increasing && slope >= 0.4 && slope <= 0.6 && worst_ks < ks_bound;
    report(5, "non-tightness at criticality",
           {ok, "medians [" + med + "], slope " + fixed(slope) + " (brute force " + fixed(brute_slope) +
                    "), max KS vs brute force " + fixed(worst_ks) + " < " + fixed(ks_bound)},
           seconds_since(start), 600.0);
}

// ++ Criterion 6: recursion against the toppling engine ++++++++++++++++++++++

void criterion_6()
{
    const auto start = Clock::now();
    std::mt19937_64 gen{kMasterSeed + 6};
    const std::vector<double> lambdas{0.5, 1.0, 3.0, kInf};
    std::uint64_t mismatches = 0, total_flux = 0;
    for (int i = 0; i < 500; ++i) {
        const std::int64_t L = 1 + static_cast<std::int64_t>(gen() % 100);
        const double lambda = lambdas[static_cast<std::size_t>(i) % lambdas.size()];
        const double mu = 1.5 * uniform01(gen);
        const auto m = asym1d::oracle_match(L, lambda, InitialLaw::poisson(mu), SeedSpec{kMasterSeed}.child(6).with_run(static_cast<std::uint64_t>(i)));
        mismatches += m.match ? 0 : 1;
        total_flux += m.engine;
    }
    report(6, "recursion vs toppling engine",
           {mismatches == 0, std::to_string(mismatches) + " mismatches over 500 instances (total flux " +
                                 std::to_string(total_flux) + ")"},
           seconds_since(start), 60.0);
}

// ++ Criterion 7: mass transport +++++++++++++++++++++++++++++++++++++++++++++

void criterion_7()
{
    const auto start = Clock::now();
    const double mu = 0.5;
    const auto params = ModelParams::arw(kInf, JumpKernel::symmetric(1));
    const Box window = Box::interval(-50'000, 49'999);
    const SeedSpec seed = SeedSpec{kMasterSeed}.child(7);
    const int runs = 100;
    int bound_ok = 0;
    bool identity = true, absorbed = true;
    double worst = 1.0;
    for (int r = 0; r < runs; ++r) {
        const auto res = dynamics::simulate(params, InitialLaw::poisson(mu), window, kInf,
                                            seed.with_run(static_cast<std::uint64_t>(r)));
        const auto check = dynamics::mass_transport_check(res.series, mu, 0.02);
        identity = identity && check.settled_equals_filled;
        absorbed = absorbed && res.absorbed;
        worst = std::min(worst, check.final_unfilled_density);
        if (check.final_unfilled_density >= 1.0 - mu - 0.02)
            ++bound_ok;
    }
    const double fraction = bound_ok / static_cast<double>(runs);
    report(7, "mass transport",
           {identity && absorbed && fraction >= 0.99,
            std::string{"settled == filled at every record: "} + (identity ? "yes" : "no") +
                ", final unfilled density >= 0.48 in " + fixed(100.0 * fraction) + "% of " +
                std::to_string(runs) + " seeds (min " + fixed(worst) + ")"},
           seconds_since(start), 600.0);
}

// ++ Criterion 8: discrete flux identity +++++++++++++++++++++++++++++++++++++

void criterion_8()
{
    const auto start = Clock::now();
    std::mt19937_64 gen{kMasterSeed + 8};
    std::poisson_distribution<std::uint32_t> eta{1.0};
    std::uint64_t mismatches = 0, total = 0;
    for (int i = 0; i < 200; ++i) {
        const std::int64_t n = static_cast<std::int64_t>(gen() % 51);
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(n + 1));
        for (auto& c : counts)
            c = eta(gen);
        // max(0, max_k S_k) with S_k = sum_{i=-k..0} (eta(i) - 1).
        std::int64_t s = 0, expected = 0;
        for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
            s += static_cast<std::int64_t>(*it) - 1;
            expected = std::max(expected, s);
        }
        const auto config = Configuration::from_counts(Box::interval(-n, 0), counts);
        const auto engine = flow::absorbed_flux(config);
        // The same instance shifted to [-n-1, -1] with an empty origin: the
        // particles entering 0 are those leaving the instance.
        auto shifted = counts;
        shifted.push_back(0);
        const auto timed = flow::measure_flow(1.0, InitialLaw::deterministic(shifted), {n + 1, 0}, kInf,
                                              SeedSpec{kMasterSeed}.child(8).with_run(static_cast<std::uint64_t>(i)));
        if (engine != static_cast<std::uint64_t>(expected) || timed.trace.total() != engine)
            ++mismatches;
        total += engine;
    }
    report(8, "discrete flux identity",
           {mismatches == 0, std::to_string(mismatches) + " mismatches over 200 instances (total flux " +
                                 std::to_string(total) + ")"},
           seconds_since(start), 60.0);
}

// ++ Criterion 9: flow scaling (flow-scaling command) +++++++++++++++++++++++++

void criterion_9(const fs::path& root, std::vector<std::pair<std::string, CliRun>>& runs)
{
    const auto run = run_cli("flow_scaling.json", root / "flow_scaling");
    runs.emplace_back("flow_scaling.json", run);
    const auto rep = read_json(run.dir / "flow_scaling.json");
    std::string ks;
    const Json* last = nullptr;
    for (const auto& c : rep["cells"]) {
        ks += (ks.empty() ? "" : ", ") + std::string{"L="} + std::to_string(c["L"].get<std::int64_t>()) + ": " +
              fixed(c["ks"].get<double>());
        last = &c;
    }
    const double mean = (*last)["mean"].get<double>();
    const double expected = (*last)["expected_mean"].get<double>();
    const bool decreasing = rep["ks_decreasing"].get<bool>();
    const bool below = rep["final_below_threshold"].get<bool>();
    const bool mean_ok = rep["mean_ok"].get<bool>();
    report(9, "flow scaling limit",
           {decreasing && below && mean_ok,
            "KS [" + ks + "], strictly decreasing: " + (decreasing ? "yes" : "no") + ", final < 0.1: " +
                (below ? "yes" : "no") + ", mean " + fixed(mean) + " vs " + fixed(expected) + " (+-10%)"},
           run.seconds, 1800.0);
}

// ++ Criterion 10: Brownian reference ++++++++++++++++++++++++++++++++++++++++

void criterion_10()
{
    const auto start = Clock::now();
    const std::size_t n = 1'000'000;
    const auto xs = flow::bm_max_reference(1.0, n, SeedSpec{kMasterSeed}.child(10));
    // Half-normal moments: E X = m, E X^2 = 1, E X^3 = 2m, E X^4 = 3, m = sqrt(2/pi).
    const double m = std::sqrt(2.0 / std::numbers::pi);
    const double var = 1.0 - m * m;
    const double central4 = 3.0 - 2.0 * m * m - 3.0 * m * m * m * m;
    const double se_mean = std::sqrt(var / static_cast<double>(n));
    const double se_var = std::sqrt((central4 - var * var) / static_cast<double>(n));
    const double mean_err = std::abs(stats::mean(xs) - m) / se_mean;
    const double var_err = std::abs(stats::variance(xs) - var) / se_var;

    double worst_ks = 0.0;
    for (double t : {0.25, 4.0, 9.0}) {
        const auto ys = flow::bm_max_reference(t, 100'000, SeedSpec{kMasterSeed}.child(10).with_run(1));
        std::vector<double> scaled;
        scaled.reserve(ys.size());
        for (double y : ys)
            scaled.push_back(y / std::sqrt(t));
        worst_ks = std::max(worst_ks, stats::ks_distance(stats::EmpiricalCdf{scaled},
                                                         [](double x) { return stats::half_normal_cdf(x, 1.0); }));
    }
    report(10, "Brownian reference",
           {mean_err < 3.0 && var_err < 3.0 && worst_ks < 0.02,
            "mean off by " + fixed(mean_err, 3) + " se, variance off by " + fixed(var_err, 3) +
                " se, scale-invariance KS " + fixed(worst_ks, 3)},
           seconds_since(start), 60.0);
}

// ++ Criterion 11: reproducibility +++++++++++++++++++++++++++++++++++++++++++

void criterion_11(const fs::path& root, std::vector<std::pair<std::string, CliRun>>& runs)
{
    const auto start = Clock::now();
    runs.emplace_back("simulate.json", run_cli("simulate.json", root / "simulate"));
    runs.emplace_back("fixation_probe.json", run_cli("fixation_probe.json", root / "fixation_probe"));

    bool ok = true;
    std::string detail;
    std::size_t files = 0;
    for (const auto& [name, first] : runs) {
        // The rerun uses two workers; the manifest hash does not cover them.
        const auto again = run_cli(name, root / ("rerun_" + fs::path{name}.stem().string()), 2);
        const bool same = first.code == again.code && !first.manifest.is_null() &&
                          first.manifest["manifest_hash"] == again.manifest["manifest_hash"] &&
                          first.manifest["outputs"] == again.manifest["outputs"];
        bool bytes = same;
        if (same)
            for (const auto& [file, digest] : first.manifest["outputs"].items()) {
                bytes = bytes && slurp(first.dir / file) == slurp(again.dir / file) &&
                        cli::sha256_hex(slurp(first.dir / file)) == digest.get<std::string>();
                ++files;
            }
        if (!bytes) {
            ok = false;
            detail += (detail.empty() ? "" : ", ") + name + " differs";
        }
    }
    if (ok)
        detail = std::to_string(runs.size()) + " experiments rerun, " + std::to_string(files) +
                 " output files byte-identical";
    report(11, "reproducibility", {ok, detail}, seconds_since(start), 5400.0);
}

} // namespace

int main()
{
    const fs::path root = fs::temp_directory_path() / "arw_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    std::vector<std::pair<std::string, CliRun>> runs;
    criteria_1_to_3(root, runs);
    criterion_4(root, runs);
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9(root, runs);
    criterion_10();
    criterion_11(root, runs);

    std::printf("%s: %d of 11 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
