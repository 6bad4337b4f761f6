#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/flow.hpp"
#include "arw/stats.hpp"

using namespace arw;
using namespace arw::flow;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrtTwoOverPi = 0.797884560802865355880;
constexpr double kOneMinusTwoOverPi = 0.363380227632418656925;

// max(0, max_k sum_{i=-k..0} (eta(i) - 1)) straight from the counts, where
// counts[j] is the count at site -n + j.
std::int64_t running_max_flux(const std::vector<std::uint32_t>& counts)
{
    std::int64_t s = 0, best = 0;
    for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
        s += static_cast<std::int64_t>(*it) - 1;
        best = std::max(best, s);
    }
    return best;
}

std::string rejection(double p, const InitialLaw& law, std::size_t runs)
{
    try {
        validate_scaling_inputs(p, law, runs);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("profile walk on hand examples")
{
    const auto c = Configuration::from_counts(Box::interval(-2, 0), {2, 0, 1});
    CHECK(profile_walk(c, 2).s == std::vector<std::int64_t>{0, -1, 0});
    CHECK(flux_oracle_discrete(profile_walk(c, 2), 2) == 0);

    const auto d = Configuration::from_counts(Box::interval(-2, 0), {3, 0, 0});
    CHECK(profile_walk(d, 2).s == std::vector<std::int64_t>{-1, -2, 0});
    CHECK(flux_oracle_discrete(profile_walk(d, 2), 2) == 0);
    CHECK(absorbed_flux(d) == 0);

    const auto e = Configuration::from_counts(Box::interval(-1, 0), {2, 1});
    CHECK(flux_oracle_discrete(profile_walk(e, 1), 1) == 1);
    CHECK(absorbed_flux(e) == 1);

    CHECK_THROWS_AS((void)profile_walk(c, 3), std::invalid_argument);
}

TEST_CASE("profile walk of a Poisson(1) field has unit variance per site")
{
    // 10^4 independent profiles of 100 sites each.
    const std::int64_t n = 99;
    std::vector<double> rescaled;
    for (std::uint64_t r = 0; r < 10000; ++r) {
        const auto c = sample_initial(InitialLaw::poisson(1.0), Box::interval(-n, 0), SeedSpec{2, r});
        rescaled.push_back(static_cast<double>(profile_walk(c, n).s.back()) / std::sqrt(static_cast<double>(n + 1)));
    }
    CHECK(stats::variance(rescaled) == doctest::Approx(1.0).epsilon(0.05));
    const auto ones = Configuration::from_counts(Box::interval(-5, 0), std::vector<std::uint32_t>(6, 1));
    CHECK(profile_walk(ones, 5).s == std::vector<std::int64_t>(6, 0));
}

TEST_CASE("absorbed flux is the running maximum of the profile walk")
{
    std::mt19937_64 gen{3};
    for (int trial = 0; trial < 300; ++trial) {
        const std::int64_t n = static_cast<std::int64_t>(gen() % 50);
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(n + 1));
        for (auto& x : counts)
            x = static_cast<std::uint32_t>(gen() % 4);
        const auto c = Configuration::from_counts(Box::interval(-n, 0), counts);
        const auto expected = running_max_flux(counts);
        CHECK(flux_oracle_discrete(profile_walk(c, n), n) == expected);
        CHECK(absorbed_flux(c) == static_cast<std::uint64_t>(expected));
    }
}

TEST_CASE("flow engine run to absorption with p = 1 gives the running-maximum flux")
{
    // The instance sits on [-n, -1]; sites 0..R hold arbitrary counts.
    std::mt19937_64 gen{4};
    for (int trial = 0; trial < 100; ++trial) {
        const std::int64_t n = 1 + static_cast<std::int64_t>(gen() % 40);
        const std::int64_t right = static_cast<std::int64_t>(gen() % 5);
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(n + 1 + right));
        for (auto& x : counts)
            x = static_cast<std::uint32_t>(gen() % 4);
        const std::vector<std::uint32_t> left(counts.begin(), counts.begin() + n);
        // A lambda = inf site also keeps exactly one of the particles reaching
        // it when every jump goes right.
        for (auto model : {FlowModel::ParticleHole, FlowModel::ArwInfiniteSleep}) {
            const auto run = measure_flow(1.0, InitialLaw::deterministic(counts), {n, right}, kInf,
                                          SeedSpec{gen(), 0}, model);
            // Nothing comes back, so each particle enters at most once.
            CHECK(run.trace.total() == static_cast<std::uint64_t>(running_max_flux(left)));
            CHECK(run.trace.directed_crossings == run.trace.total());
            CHECK(run.crossings_from_right == 0);
        }
    }
}

TEST_CASE("lambda = inf ARW flow: crossings are sorted and counted once per particle")
{
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto run = measure_flow(0.7, InitialLaw::poisson(1.0), default_window(0.7, 60.0), 60.0, SeedSpec{42, r},
                                      FlowModel::ArwInfiniteSleep);
        CHECK(std::is_sorted(run.trace.times.begin(), run.trace.times.end()));
        CHECK(run.trace.directed_crossings >= run.trace.total());
        const auto again = measure_flow(0.7, InitialLaw::poisson(1.0), default_window(0.7, 60.0), 60.0,
                                        SeedSpec{42, r}, FlowModel::ArwInfiniteSleep);
        CHECK(again.trace.times == run.trace.times);
    }
    const auto lone = measure_flow(0.7, InitialLaw::deterministic({1, 0, 1}), {1, 1}, kInf, SeedSpec{},
                                   FlowModel::ArwInfiniteSleep);
    CHECK(lone.events == 0);
}

TEST_CASE("an empty left half lets nothing through")
{
    // Sites -30..-1 empty, sites 0..20 crowded. Only particles that start
    // left of the origin can enter it when nothing moves left.
    std::vector<std::uint32_t> counts(30, 0);
    counts.resize(51, 3);
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto run = measure_flow(1.0, InitialLaw::deterministic(counts), {30, 20}, kInf, SeedSpec{43, r});
        CHECK(run.trace.total() == 0);
        CHECK(run.events > 0);
    }
    // With backtracking a particle from the right can step back to -1 and
    // re-enter, but rarely.
    std::uint64_t entered = 0;
    for (std::uint64_t r = 0; r < 200; ++r) {
        const auto run = measure_flow(0.8, InitialLaw::deterministic(counts), {30, 20}, kInf, SeedSpec{44, r});
        CHECK(run.crossings_from_right == run.trace.total());
        entered += run.trace.total();
    }
    CHECK(static_cast<double>(entered) / 200.0 < 1.0);
}

TEST_CASE("particles starting right of the origin add O(1) crossings")
{
    // A particle from x >= 0 must backtrack to -1 before it can cross; the
    // expected number that do is bounded by a constant independent of T.
    for (double horizon : {100.0, 1000.0}) {
        const auto window = default_window(0.8, horizon);
        std::vector<double> from_right;
        std::uint64_t total = 0;
        for (std::uint64_t r = 0; r < 200; ++r) {
            const auto run = measure_flow(0.8, InitialLaw::poisson(1.0), window, horizon, SeedSpec{44, r});
            from_right.push_back(static_cast<double>(run.crossings_from_right));
            total += run.trace.total();
        }
        CHECK(stats::mean(from_right) < 1.0);
        CHECK(static_cast<double>(total) / 200.0 > 5.0 * stats::mean(from_right));
    }
}

TEST_CASE("hand cases for the crossing count")
{
    // Surplus at -1 and a lone particle at 0: the surplus enters the origin.
    const auto one = measure_flow(1.0, InitialLaw::deterministic({2, 1}), {1, 0}, kInf, SeedSpec{});
    CHECK(one.trace.total() == 1);
    CHECK(one.events == 2);
    // Empty origin: the surplus enters it and settles; the other particle
    // stays at -1.
    const auto fill = measure_flow(1.0, InitialLaw::deterministic({2, 0}), {1, 0}, kInf, SeedSpec{});
    CHECK(fill.trace.total() == 1);
    CHECK(fill.events == 1);
    // A lone particle at -1 is settled and never moves.
    CHECK(measure_flow(1.0, InitialLaw::deterministic({1, 0}), {1, 0}, kInf, SeedSpec{}).trace.total() == 0);
}

TEST_CASE("flow trace counts are right-continuous step functions")
{
    const FlowTrace tr{{1.0, 2.0, 2.0, 3.0}, 6};
    CHECK(tr.count(0.5) == 0);
    CHECK(tr.count(1.0) == 1);
    CHECK(tr.count(2.0) == 3);
    CHECK(tr.count(10.0) == 4);
    CHECK(tr.total() == 4);
}

TEST_CASE("crossing times are nondecreasing and repeats are counted separately")
{
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto run = measure_flow(0.6, InitialLaw::poisson(1.0), default_window(0.6, 50.0), 50.0, SeedSpec{5, r});
        CHECK(std::is_sorted(run.trace.times.begin(), run.trace.times.end()));
        CHECK(run.trace.directed_crossings >= run.trace.total());
        for (double t : run.trace.times)
            CHECK(t <= 50.0);
        CHECK_FALSE(run.window_warning);
    }
}

TEST_CASE("crossings up to t are a prefix of those up to a later horizon")
{
    const auto window = default_window(0.8, 40.0);
    const auto short_run = measure_flow(0.8, InitialLaw::poisson(1.0), window, 20.0, SeedSpec{6, 0});
    const auto long_run = measure_flow(0.8, InitialLaw::poisson(1.0), window, 40.0, SeedSpec{6, 0});
    REQUIRE(long_run.trace.total() >= short_run.trace.total());
    CHECK(long_run.trace.count(20.0) == short_run.trace.total());
    CHECK(std::equal(short_run.trace.times.begin(), short_run.trace.times.end(), long_run.trace.times.begin()));
}

TEST_CASE("default window sizes")
{
    // ln(0.8 / 0.2) = ln 4; 30 ln 10 / ln 4 = 49.83.
    const auto w = default_window(0.8, 100.0);
    CHECK(w.left == 140);
    CHECK(w.right == 50);
    CHECK(default_window(0.99, 1.0).right == 16);
    CHECK_FALSE(window_too_small(w, 0.8, 100.0));
    CHECK(window_too_small({100, 50}, 0.8, 100.0));
}

TEST_CASE("measure_flow rejects bad arguments")
{
    CHECK_THROWS_AS((void)measure_flow(0.5, InitialLaw::poisson(1.0), {5, 5}, 1.0, SeedSpec{}), std::invalid_argument);
    CHECK_THROWS_AS((void)measure_flow(0.8, InitialLaw::poisson(1.0), {-1, 5}, 1.0, SeedSpec{}), std::invalid_argument);
    CHECK_THROWS_AS((void)measure_flow(0.8, InitialLaw::poisson(1.0), {5, 5}, -1.0, SeedSpec{}), std::invalid_argument);
}

TEST_CASE("Brownian maximum reference has the half-normal moments")
{
    for (double t : {0.5, 2.0}) {
        const std::size_t n = 1000000;
        const auto xs = bm_max_reference(t, n, SeedSpec{7, 0});
        const double m = std::sqrt(t) * kSqrtTwoOverPi;
        const double var = t * kOneMinusTwoOverPi;
        CHECK(std::abs(stats::mean(xs) - m) < 5.0 * std::sqrt(var / n));
        CHECK(stats::variance(xs) == doctest::Approx(var).epsilon(0.01));
    }
}

TEST_CASE("Brownian maximum reference is scale invariant")
{
    const auto xs = bm_max_reference(3.0, 100000, SeedSpec{8, 0});
    std::vector<double> scaled;
    for (double x : xs)
        scaled.push_back(x / std::sqrt(3.0));
    const double d = stats::ks_distance(stats::EmpiricalCdf{scaled}, [](double x) { return stats::half_normal_cdf(x, 1.0); });
    CHECK(d < 0.02);
    CHECK_THROWS_AS((void)bm_max_reference(1.0, 0, SeedSpec{}), std::invalid_argument);
}

TEST_CASE("scaling preconditions name the violated hypothesis")
{
    CHECK(rejection(0.5, InitialLaw::poisson(1.0), 2000).find("p > 1/2") != std::string::npos);
    CHECK(rejection(0.8, InitialLaw::bernoulli_mixture(1, 2, 0.0), 2000).find("non-constant") != std::string::npos);
    CHECK(rejection(0.8, InitialLaw::deterministic({1, 1}), 2000).find("non-constant") != std::string::npos);
    CHECK(rejection(0.8, InitialLaw::poisson(0.9), 2000).find("mean 1") != std::string::npos);
    CHECK(rejection(0.8, InitialLaw::poisson(1.0), 99).find("insufficient runs") != std::string::npos);
    CHECK(rejection(0.8, InitialLaw::geometric(1.0), 100).empty());
}

TEST_CASE("small scaling campaign")
{
    ScalingOptions opts;
    opts.runs = 400;
    opts.workers = 2;
    const auto rep = verify_scaling(0.8, InitialLaw::poisson(1.0), {0.5, 1.0}, {10, 30}, SeedSpec{9, 0}, opts);
    CHECK(rep.v == doctest::Approx(0.6));
    CHECK(rep.sigma == 1.0);
    REQUIRE(rep.cells.size() == 4);
    CHECK(rep.monotone_in_t);
    CHECK(rep.cell(1, 1).L == 30);
    CHECK(rep.cell(1, 1).t == 1.0);
    CHECK(rep.cell(1, 1).samples.size() == 400);
    CHECK(rep.cell(1, 1).expected_mean == doctest::Approx(kSqrtTwoOverPi));
    // Finite-size bias is visible at L = 30 but the mean is in range.
    CHECK(rep.cell(1, 1).mean == doctest::Approx(kSqrtTwoOverPi).epsilon(0.15));

    opts.workers = 1;
    const auto again = verify_scaling(0.8, InitialLaw::poisson(1.0), {0.5, 1.0}, {10, 30}, SeedSpec{9, 0}, opts);
    CHECK(again.cell(1, 1).samples == rep.cell(1, 1).samples);
}
