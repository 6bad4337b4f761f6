#ifndef ARW_ASYM1D_HPP
#define ARW_ASYM1D_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "arw/abelian.hpp"
#include "arw/core.hpp"

namespace arw::asym1d {

/// lambda / (1 + lambda); 1 for lambda = inf. Throws unless lambda > 0.
[[nodiscard]] double mu_c_exact(double lambda);

/// max(prev + eta - y, 0).
[[nodiscard]] constexpr std::uint64_t reflect_step(std::uint64_t prev, std::uint64_t eta, std::uint64_t y) noexcept
{
    const auto up = prev + eta;
    return up > y ? up - y : 0;
}

/// Sites -L..0 stabilized left to right in the totally asymmetric ARW.
/// Index i refers to site -L + i; n[i] is the number of particles that jump
/// from -L + i to -L + i + 1, so n[L] is the flux out of the origin.
struct ReflectedWalkRun {
    std::int64_t L = 0;
    std::vector<std::uint32_t> eta;
    std::vector<std::uint8_t> y;
    std::vector<std::uint64_t> n;

    [[nodiscard]] std::uint64_t flux() const { return n.back(); }
    /// Recomputes n from (eta, y) and compares.
    [[nodiscard]] bool consistent() const;
};

/// The per-site uniforms come from one sequential stream, eta first and Y
/// second, so walks for different densities are quantile-coupled and the
/// values for a shorter L are a prefix of those for a longer one. Y is drawn
/// even where the site receives no particle, keeping increments i.i.d.
[[nodiscard]] ReflectedWalkRun reflected_walk(std::int64_t L, double lambda, const InitialLaw& law,
                                              const SeedSpec& seed);

/// n[L] for every L in `ladder` (increasing) from a single pass, without
/// storing the run. Equal to reflected_walk(L, ...).flux().
[[nodiscard]] std::vector<std::uint64_t> reflected_flux(const std::vector<std::int64_t>& ladder, double lambda,
                                                        const InitialLaw& law, const SeedSpec& seed);

// ++ Oracle against the toppling engine ++++++++++++++++++++++++++++++++++++++

/// Whether the last particle stays passive when `n` particles are stabilized
/// at window site `i` with a totally asymmetric tape: the first instruction
/// after the (n - 1)-th jump is Sleep. For n = 0 instruction 0 is used, which
/// is independent of everything else.
[[nodiscard]] bool sleep_indicator(const abelian::InstructionTape& tape, SiteIndex i, std::uint64_t n);

struct OracleMatch {
    bool match = true;
    std::uint64_t recursion = 0;
    std::uint64_t engine = 0;
};

/// Runs the recursion with Y read off the tape and compares its flux with
/// the number of particles leaving [-L, 0] to the right after stabilizing
/// the window with the toppling engine under `policy`.
OracleMatch oracle_match(std::int64_t L, double lambda, const InitialLaw& law, const SeedSpec& seed,
                         abelian::OrderPolicy policy = abelian::OrderPolicy::Random);

// ++ Critical scan +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

enum class Regime { Fixation, Critical, NonFixation };

[[nodiscard]] std::string to_string(Regime r);

/// Slopes of log(1 + median flux) against log L. Calibrated on pilot runs:
/// a tight flux gives slopes near 0, a null-recurrent one near 1/2 and a
/// transient one near 1.
struct ClassifierThresholds {
    double tight_slope = 0.25;
    double linear_slope = 0.75;
};

struct RegimeReport {
    double lambda = 0.0;
    double mu = 0.0;
    double drift = 0.0;
    Regime regime = Regime::Fixation;
    std::vector<std::int64_t> ladder;
    std::vector<double> median_flux;   ///< per ladder entry
    double slope = 0.0;
    double mean_flux = 0.0;            ///< at the largest L
    double q10 = 0.0, q90 = 0.0;       ///< at the largest L
    /// Fraction of seeds with flux >= drift * L / 2 at the largest L (0 when
    /// the drift is not positive).
    double linear_fraction = 0.0;
};

struct ScanOptions {
    std::vector<std::int64_t> ladder{1'000, 10'000, 100'000};
    std::uint64_t seeds = 1000;
    ClassifierThresholds thresholds;
    int workers = 1;
};

/// One report per density. Run r uses seed.with_run(r) at every density.
[[nodiscard]] std::vector<RegimeReport> critical_scan(double lambda, const std::vector<double>& mu_grid,
                                                      const SeedSpec& seed, const ScanOptions& options = {});

/// Classifies one density from the flux samples of each ladder entry.
[[nodiscard]] RegimeReport classify(double lambda, double mu, const std::vector<std::int64_t>& ladder,
                                    const std::vector<std::vector<double>>& flux_by_level,
                                    const ClassifierThresholds& thresholds);

/// Largest density classified as fixation, or NaN when there is none.
[[nodiscard]] double transition_point(const std::vector<RegimeReport>& reports);

} // namespace arw::asym1d

#endif
