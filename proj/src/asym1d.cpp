#include "arw/asym1d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "arw/parallel.hpp"

namespace arw::asym1d {

namespace {

/// Draws (eta, y) pairs in the fixed order shared by every walk routine.
/// Thresholds act on the top 53 bits, so eta() equals
/// law.draw(to_unit(bits)) and y() equals to_unit(bits) < lambda/(1+lambda).
class SiteDraws {
public:
    SiteDraws(double lambda, const InitialLaw& law, const SeedSpec& seed)
        : law_{law}, engine_{seed.stream(Purpose::Walk)}, y_threshold_{threshold(mu_c_exact(lambda))}
    {
        if (!law.sampler())
            throw std::invalid_argument("reflected walk: needs an i.i.d. law");
        const auto& table = law.sampler()->cdf_table();
        base_ = static_cast<std::uint32_t>(law.sampler()->base());
        for (double c : table)
            eta_thresholds_.push_back(threshold(c));
        if (!eta_thresholds_.empty())
            eta_thresholds_.back() = ~std::uint64_t{0};
        for (std::size_t k = 0; k < kHead; ++k)
            head_[k] = k < eta_thresholds_.size() ? eta_thresholds_[k] : ~std::uint64_t{0};
    }

    std::uint32_t eta()
    {
        if (eta_thresholds_.empty())
            return law_.draw(uniform01(engine_));
        const std::uint64_t u = engine_() >> 11;
        // Branch-free count over the first entries; the tail is rare.
        std::uint32_t k = static_cast<std::uint32_t>(u >= head_[0]) + static_cast<std::uint32_t>(u >= head_[1]) +
                          static_cast<std::uint32_t>(u >= head_[2]) + static_cast<std::uint32_t>(u >= head_[3]);
        if (k == kHead)
            while (u >= eta_thresholds_[k])
                ++k;
        return base_ + k;
    }

    std::uint8_t y() { return (engine_() >> 11) < y_threshold_ ? 1 : 0; }

private:
    /// Smallest integer m with m * 2^-53 >= c, so (u53 < m) == (u53 * 2^-53 < c).
    static std::uint64_t threshold(double c)
    {
        return static_cast<std::uint64_t>(std::ceil(c * 0x1.0p53));
    }

    const InitialLaw& law_;
    SplitMix64 engine_;
    std::uint64_t y_threshold_;
    static constexpr std::uint32_t kHead = 4;

    std::vector<std::uint64_t> eta_thresholds_;
    std::array<std::uint64_t, kHead> head_{};
    std::uint32_t base_ = 0;
};

void check_length(std::int64_t L)
{
    if (L < 1)
        throw std::invalid_argument("reflected walk: L must be >= 1");
}

} // namespace

double mu_c_exact(double lambda)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("mu_c: lambda must be > 0");
    if (std::isinf(lambda))
        return 1.0;
    return lambda / (1.0 + lambda);
}

bool ReflectedWalkRun::consistent() const
{
    const auto len = static_cast<std::size_t>(L) + 1;
    if (eta.size() != len || y.size() != len || n.size() != len)
        return false;
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < len; ++i) {
        prev = reflect_step(prev, eta[i], y[i]);
        if (prev != n[i])
            return false;
    }
    return true;
}

ReflectedWalkRun reflected_walk(std::int64_t L, double lambda, const InitialLaw& law, const SeedSpec& seed)
{
    check_length(L);
    SiteDraws draws{lambda, law, seed};
    ReflectedWalkRun run;
    run.L = L;
    const auto len = static_cast<std::size_t>(L) + 1;
    run.eta.reserve(len);
    run.y.reserve(len);
    run.n.reserve(len);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < len; ++i) {
        run.eta.push_back(draws.eta());
        run.y.push_back(draws.y());
        prev = reflect_step(prev, run.eta.back(), run.y.back());
        run.n.push_back(prev);
    }
    return run;
}

std::vector<std::uint64_t> reflected_flux(const std::vector<std::int64_t>& ladder, double lambda,
                                          const InitialLaw& law, const SeedSpec& seed)
{
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        check_length(ladder[k]);
        if (k > 0 && ladder[k] <= ladder[k - 1])
            throw std::invalid_argument("reflected_flux: ladder must increase");
    }
    SiteDraws draws{lambda, law, seed};
    std::vector<std::uint64_t> out;
    out.reserve(ladder.size());
    std::uint64_t prev = 0;
    std::int64_t i = 0;
    for (auto L : ladder) {
        for (; i <= L; ++i) {
            const auto e = draws.eta();
            prev = reflect_step(prev, e, draws.y());
        }
        out.push_back(prev);
    }
    return out;
}

bool sleep_indicator(const abelian::InstructionTape& tape, SiteIndex i, std::uint64_t n)
{
    if (tape.semantics() == Semantics::ArwInfinite)
        return n > 0 || tape.at(i, 0).is_sleep();
    std::uint64_t k = 0;
    if (n > 0)
        for (std::uint64_t jumps = 0; jumps + 1 < n; ++k)
            if (!tape.at(i, k).is_sleep())
                ++jumps;
    return tape.at(i, k).is_sleep();
}

OracleMatch oracle_match(std::int64_t L, double lambda, const InitialLaw& law, const SeedSpec& seed,
                         abelian::OrderPolicy policy)
{
    check_length(L);
    const Box window = Box::interval(-L, 0);
    const auto params = ModelParams::arw(lambda, JumpKernel::biased(1.0));
    Configuration config = sample_initial(law, window, seed);
    abelian::InstructionTape tape{window, params, seed.stream(Purpose::Tape)};

    OracleMatch out;
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const std::uint64_t arriving = prev + config[i].active;
        prev = reflect_step(prev, config[i].active, sleep_indicator(tape, i, arriving) ? 1 : 0);
    }
    out.recursion = prev;

    abelian::StabilizeOptions opts;
    opts.policy = policy;
    opts.order_seed = seed.stream(Purpose::Order);
    const auto res = abelian::stabilize(config, tape, window, opts);
    if (!res.stable())
        throw std::runtime_error("oracle_match: toppling budget exceeded");
    out.engine = config.exited_right();
    out.match = out.recursion == out.engine;
    return out;
}

std::string to_string(Regime r)
{
    switch (r) {
    case Regime::Fixation: return "fixation";
    case Regime::Critical: return "critical";
    case Regime::NonFixation: return "non-fixation";
    }
    return "?";
}

RegimeReport classify(double lambda, double mu, const std::vector<std::int64_t>& ladder,
                      const std::vector<std::vector<double>>& flux_by_level, const ClassifierThresholds& thresholds)
{
    if (ladder.size() < 2 || flux_by_level.size() != ladder.size())
        throw std::invalid_argument("classify: need samples for two or more ladder entries");
    RegimeReport r;
    r.lambda = lambda;
    r.mu = mu;
    r.drift = mu - mu_c_exact(lambda);
    r.ladder = ladder;
    std::vector<double> log_l, log_m;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        r.median_flux.push_back(stats::median(flux_by_level[k]));
        log_l.push_back(std::log(static_cast<double>(ladder[k])));
        log_m.push_back(std::log1p(r.median_flux.back()));
    }
    r.slope = stats::ols_slope(log_l, log_m);
    if (r.slope < thresholds.tight_slope)
        r.regime = Regime::Fixation;
    else if (r.slope > thresholds.linear_slope)
        r.regime = Regime::NonFixation;
    else
        r.regime = Regime::Critical;

    const auto& last = flux_by_level.back();
    r.mean_flux = stats::mean(last);
    r.q10 = stats::quantile(last, 0.1);
    r.q90 = stats::quantile(last, 0.9);
    if (r.drift > 0.0) {
        const double bar = 0.5 * r.drift * static_cast<double>(ladder.back());
        r.linear_fraction = static_cast<double>(std::count_if(last.begin(), last.end(),
                                                              [&](double x) { return x >= bar; })) /
                            static_cast<double>(last.size());
    }
    return r;
}

std::vector<RegimeReport> critical_scan(double lambda, const std::vector<double>& mu_grid, const SeedSpec& seed,
                                        const ScanOptions& options)
{
    for (double mu : mu_grid)
        if (!(mu >= 0.0 && mu <= 1.0))
            throw std::invalid_argument("critical_scan: densities must lie in [0, 1]");
    if (options.seeds == 0)
        throw std::invalid_argument("critical_scan: need at least one seed");

    std::vector<RegimeReport> reports;
    reports.reserve(mu_grid.size());
    for (double mu : mu_grid) {
        const auto law = InitialLaw::poisson(mu);
        const auto runs = parallel_map<std::vector<std::uint64_t>>(
            options.seeds, options.workers,
            [&](std::size_t r) { return reflected_flux(options.ladder, lambda, law, seed.with_run(r)); });
        std::vector<std::vector<double>> by_level(options.ladder.size());
        for (const auto& run : runs)
            for (std::size_t k = 0; k < run.size(); ++k)
                by_level[k].push_back(static_cast<double>(run[k]));
        reports.push_back(classify(lambda, mu, options.ladder, by_level, options.thresholds));
    }
    return reports;
}

double transition_point(const std::vector<RegimeReport>& reports)
{
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : reports)
        if (r.regime == Regime::Fixation && !(r.mu <= best))
            best = r.mu;
    return best;
}

} // namespace arw::asym1d
