#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "arw/asym1d.hpp"
#include "arw/stats.hpp"

using namespace arw;
using namespace arw::asym1d;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Direct simulation of the totally asymmetric ARW on [-L, 0], written from
// the particle rules alone: sites are stabilized left to right; with m >= 2
// particles present a Sleep is a no-op, so m - 1 particles leave for sure and
// the last one leaves unless it falls asleep before its next jump.
std::uint64_t brute_flux(std::int64_t L, double lambda, double mu, std::mt19937_64& gen)
{
    std::poisson_distribution<std::uint32_t> eta{mu};
    std::bernoulli_distribution sleeps{lambda / (1.0 + lambda)};
    std::uint64_t moving = 0;
    for (std::int64_t x = -L; x <= 0; ++x) {
        const std::uint64_t here = moving + eta(gen);
        moving = here == 0 ? 0 : here - (sleeps(gen) ? 1 : 0);
    }
    return moving;
}

std::vector<double> geometric_levels(const std::vector<std::int64_t>& ladder, double base, double power)
{
    std::vector<double> out;
    for (auto L : ladder)
        out.push_back(base * std::pow(static_cast<double>(L), power));
    return out;
}

} // namespace

TEST_CASE("critical density")
{
    CHECK(mu_c_exact(1.0) == 0.5);
    CHECK(mu_c_exact(3.0) == 0.75);
    CHECK(mu_c_exact(0.5) == doctest::Approx(1.0 / 3.0));
    CHECK(mu_c_exact(kInf) == 1.0);
    CHECK_THROWS_AS((void)mu_c_exact(0.0), std::invalid_argument);
}

TEST_CASE("reflection step")
{
    CHECK(reflect_step(0, 2, 1) == 1);
    CHECK(reflect_step(0, 0, 1) == 0);
    CHECK(reflect_step(3, 0, 1) == 2);
    CHECK(reflect_step(3, 1, 0) == 4);
}

TEST_CASE("reflected walk recursion is internally consistent")
{
    for (std::uint64_t r = 0; r < 50; ++r) {
        const auto run = reflected_walk(300, 1.0, InitialLaw::poisson(0.6), SeedSpec{1, r});
        CHECK(run.consistent());
        CHECK(run.n.size() == 301);
        std::uint64_t prev = 0;
        for (std::size_t i = 0; i < run.n.size(); ++i) {
            const std::uint64_t up = prev + run.eta[i];
            prev = up > run.y[i] ? up - run.y[i] : 0;
            CHECK(run.n[i] == prev);
        }
    }
    auto broken = reflected_walk(10, 1.0, InitialLaw::poisson(2.0), SeedSpec{2, 0});
    broken.n.back() += 1;
    CHECK_FALSE(broken.consistent());
}

TEST_CASE("no particles means no flux")
{
    CHECK(reflected_walk(1000, 1.0, InitialLaw::poisson(0.0), SeedSpec{3, 0}).flux() == 0);
    CHECK(reflected_flux({10, 100}, 2.0, InitialLaw::poisson(0.0), SeedSpec{3, 0}) ==
          std::vector<std::uint64_t>{0, 0});
}

TEST_CASE("single-pass ladder fluxes equal the stored runs")
{
    const std::vector<std::int64_t> ladder{1, 7, 50, 400, 3000};
    for (std::uint64_t r = 0; r < 20; ++r) {
        for (double mu : {0.3, 0.5, 0.8}) {
            const SeedSpec seed{4, r};
            const auto law = InitialLaw::poisson(mu);
            const auto fluxes = reflected_flux(ladder, 1.0, law, seed);
            for (std::size_t k = 0; k < ladder.size(); ++k)
                CHECK(fluxes[k] == reflected_walk(ladder[k], 1.0, law, seed).flux());
        }
    }
    CHECK_THROWS_AS((void)reflected_flux({10, 5}, 1.0, InitialLaw::poisson(0.5), SeedSpec{}), std::invalid_argument);
}

TEST_CASE("flux is monotone in the density under the common seed")
{
    for (std::uint64_t r = 0; r < 100; ++r) {
        std::uint64_t previous = 0;
        for (double mu = 0.0; mu <= 1.0; mu += 0.05) {
            const auto f = reflected_walk(500, 1.0, InitialLaw::poisson(mu), SeedSpec{5, r}).flux();
            CHECK(f >= previous);
            previous = f;
        }
    }
}

TEST_CASE("sleep indicators and densities follow their laws")
{
    const double lambda = 1.5;
    const auto run = reflected_walk(999999, lambda, InitialLaw::poisson(0.4), SeedSpec{6, 0});
    double eta_sum = 0.0, y_sum = 0.0;
    for (std::size_t i = 0; i < run.eta.size(); ++i) {
        eta_sum += run.eta[i];
        y_sum += run.y[i];
    }
    const double n = static_cast<double>(run.eta.size());
    const double p = lambda / (1.0 + lambda);
    CHECK(std::abs(eta_sum / n - 0.4) < 5.0 * std::sqrt(0.4 / n));
    CHECK(std::abs(y_sum / n - p) < 5.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("flux law matches a direct simulation of the asymmetric model")
{
    for (double mu : {0.3, 0.5, 0.7}) {
        std::mt19937_64 gen{static_cast<std::uint64_t>(mu * 100)};
        std::vector<double> brute, walk;
        for (std::uint64_t r = 0; r < 3000; ++r) {
            brute.push_back(static_cast<double>(brute_flux(200, 1.0, mu, gen)));
            walk.push_back(static_cast<double>(reflected_walk(200, 1.0, InitialLaw::poisson(mu), SeedSpec{7, r}).flux()));
        }
        // Two-sample KS at level 0.001 for equal sizes: 1.95 * sqrt(2 / n).
        CHECK(stats::ks_two_sample(stats::EmpiricalCdf{brute}, stats::EmpiricalCdf{walk}) <
              1.95 * std::sqrt(2.0 / 3000.0));
    }
}

TEST_CASE("sleep indicator reads the tape after the right number of jumps")
{
    const Box w = Box::interval(0, 0);
    const abelian::InstructionTape tape{w, ModelParams::arw(1.0, JumpKernel::biased(1.0)), 9};
    CHECK(sleep_indicator(tape, 0, 0) == tape.at(0, 0).is_sleep());
    CHECK(sleep_indicator(tape, 0, 1) == tape.at(0, 0).is_sleep());
    for (std::uint64_t n = 2; n < 30; ++n) {
        std::uint64_t k = 0, jumps = 0;
        while (jumps < n - 1) {
            if (!tape.at(0, k).is_sleep())
                ++jumps;
            ++k;
        }
        CHECK(sleep_indicator(tape, 0, n) == tape.at(0, k).is_sleep());
    }
    const abelian::InstructionTape inf{w, ModelParams::arw(kInf, JumpKernel::biased(1.0)), 9};
    CHECK(sleep_indicator(inf, 0, 3));
}

TEST_CASE("recursion agrees with the toppling engine")
{
    std::mt19937_64 gen{11};
    for (int trial = 0; trial < 200; ++trial) {
        const std::int64_t L = 1 + static_cast<std::int64_t>(gen() % 60);
        const double lambda = trial % 5 == 0 ? kInf : 0.2 + 3.0 * uniform01(gen);
        const double mu = 1.5 * uniform01(gen);
        const auto policy = static_cast<abelian::OrderPolicy>(trial % 3);
        const auto m = oracle_match(L, lambda, InitialLaw::poisson(mu), SeedSpec{gen(), 0}, policy);
        CHECK(m.match);
    }
}

TEST_CASE("classifier on synthetic growth rates")
{
    const std::vector<std::int64_t> ladder{1000, 10000, 100000};
    auto levels = [&](double base, double power) {
        std::vector<std::vector<double>> by_level;
        for (double v : geometric_levels(ladder, base, power))
            by_level.push_back(std::vector<double>(11, v));
        return by_level;
    };
    CHECK(classify(1.0, 0.3, ladder, levels(3.0, 0.0), {}).regime == Regime::Fixation);
    CHECK(classify(1.0, 0.5, ladder, levels(1.0, 0.5), {}).regime == Regime::Critical);
    const auto linear = classify(1.0, 0.7, ladder, levels(0.2, 1.0), {});
    CHECK(linear.regime == Regime::NonFixation);
    CHECK(linear.linear_fraction == 1.0);
    CHECK(linear.drift == doctest::Approx(0.2));
    CHECK_THROWS_AS((void)classify(1.0, 0.5, {1000}, levels(1.0, 0.5), {}), std::invalid_argument);
}

TEST_CASE("transition point picks the largest fixation density")
{
    std::vector<RegimeReport> reports(4);
    reports[0].mu = 0.1;
    reports[1].mu = 0.2;
    reports[2].mu = 0.3;
    reports[2].regime = Regime::Critical;
    reports[3].mu = 0.4;
    reports[3].regime = Regime::NonFixation;
    CHECK(transition_point(reports) == 0.2);
    reports[0].regime = reports[1].regime = Regime::NonFixation;
    CHECK(std::isnan(transition_point(reports)));
}

TEST_CASE("flux is tight below the critical density and linear above it")
{
    const std::int64_t L = 100000;
    std::uint64_t large = 0;
    std::vector<double> ratios;
    for (std::uint64_t r = 0; r < 100; ++r) {
        if (reflected_walk(L, 1.0, InitialLaw::poisson(0.3), SeedSpec{12, r}).flux() > 50)
            ++large;
        ratios.push_back(static_cast<double>(reflected_walk(L, 1.0, InitialLaw::poisson(0.7), SeedSpec{13, r}).flux()) /
                         static_cast<double>(L));
    }
    CHECK(large <= 5);
    CHECK(stats::mean(ratios) == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("scan validates its inputs and uses common seeds across densities")
{
    ScanOptions opts;
    opts.ladder = {100, 1000};
    opts.seeds = 20;
    CHECK_THROWS_AS((void)critical_scan(1.0, {1.2}, SeedSpec{}, opts), std::invalid_argument);
    const auto reports = critical_scan(1.0, {0.2, 0.8}, SeedSpec{14, 0}, opts);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].regime == Regime::Fixation);
    CHECK(reports[1].regime == Regime::NonFixation);
    opts.workers = 3;
    const auto parallel = critical_scan(1.0, {0.2, 0.8}, SeedSpec{14, 0}, opts);
    CHECK(parallel[1].median_flux == reports[1].median_flux);
}
