#include "arw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace arw::stats {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument(what);
}

} // namespace

void validate(const Distribution& dist)
{
    std::visit(Overloaded{
                   [](const Poisson& d) {
                       require(std::isfinite(d.mean) && d.mean >= 0.0, "poisson: mean must be >= 0");
                       require(d.mean <= kMaxPoissonMean, "poisson: mean above inversion limit 30");
                   },
                   [](const Geometric& d) {
                       require(std::isfinite(d.mean) && d.mean >= 0.0, "geometric: mean must be >= 0");
                   },
                   [](const Bernoulli& d) {
                       require(d.p >= 0.0 && d.p <= 1.0, "bernoulli: p must lie in [0, 1]");
                   },
                   [](const TwoPoint& d) {
                       require(d.lo >= 0 && d.lo < d.hi, "two-point: need 0 <= lo < hi");
                       require(d.weight >= 0.0 && d.weight <= 1.0, "two-point: weight must lie in [0, 1]");
                   },
                   [](const Normal& d) {
                       require(std::isfinite(d.mean) && std::isfinite(d.sd) && d.sd >= 0.0,
                               "normal: sd must be finite and >= 0");
                   },
               },
               dist);
}

double analytic_mean(const Distribution& dist)
{
    return std::visit(Overloaded{
                          [](const Poisson& d) { return d.mean; },
                          [](const Geometric& d) { return d.mean; },
                          [](const Bernoulli& d) { return d.p; },
                          [](const TwoPoint& d) { return d.lo + d.weight * (d.hi - d.lo); },
                          [](const Normal& d) { return d.mean; },
                      },
                      dist);
}

double analytic_variance(const Distribution& dist)
{
    return std::visit(Overloaded{
                          [](const Poisson& d) { return d.mean; },
                          [](const Geometric& d) { return d.mean * (1.0 + d.mean); },
                          [](const Bernoulli& d) { return d.p * (1.0 - d.p); },
                          [](const TwoPoint& d) {
                              const double gap = d.hi - d.lo;
                              return d.weight * (1.0 - d.weight) * gap * gap;
                          },
                          [](const Normal& d) { return d.sd * d.sd; },
                      },
                      dist);
}

CountSampler::CountSampler(const Distribution& dist)
{
    validate(dist);
    std::visit(Overloaded{
                   [this](const Poisson& d) {
                       // Tabulate until the remaining tail is below double resolution.
                       double pk = std::exp(-d.mean);
                       double acc = 0.0;
                       for (int k = 0;; ++k) {
                           acc += pk;
                           cdf_.push_back(acc);
                           if (k > d.mean && 1.0 - acc < 1e-17)
                               break;
                           if (k > 200)
                               break;
                           pk *= d.mean / (k + 1);
                       }
                       cdf_.back() = 1.0;
                   },
                   [this](const Geometric& d) {
                       if (d.mean == 0.0) {
                           cdf_ = {1.0};
                           return;
                       }
                       kind_ = Kind::Geometric;
                       log_ratio_ = std::log(d.mean / (1.0 + d.mean));
                   },
                   [this](const Bernoulli& d) { cdf_ = {1.0 - d.p, 1.0}; },
                   [this](const TwoPoint& d) {
                       base_ = d.lo;
                       cdf_.assign(static_cast<std::size_t>(d.hi - d.lo) + 1, 1.0 - d.weight);
                       cdf_.back() = 1.0;
                   },
                   [](const Normal&) { throw std::invalid_argument("normal is not a count law"); },
               },
               dist);
}

int CountSampler::operator()(double u) const
{
    if (kind_ == Kind::Geometric) {
        // P[X >= k] = r^k, so X = floor(log(1-u) / log r).
        return static_cast<int>(std::floor(std::log1p(-u) / log_ratio_));
    }
    std::size_t k = 0;
    while (k + 1 < cdf_.size() && u >= cdf_[k])
        ++k;
    return base_ + static_cast<int>(k);
}

std::vector<double> sample_dist(const Distribution& dist, std::size_t n, const SeedSpec& seed)
{
    validate(dist);
    std::vector<double> out;
    out.reserve(n);
    auto engine = seed.engine(Purpose::Sampling);
    if (const auto* normal = std::get_if<Normal>(&dist)) {
        std::normal_distribution<double> gauss{normal->mean, normal->sd};
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(normal->sd == 0.0 ? normal->mean : gauss(engine));
        return out;
    }
    const CountSampler sampler{dist};
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sampler(uniform01(engine)));
    return out;
}

double standard_normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double half_normal_cdf(double x, double scale)
{
    if (x < 0.0)
        return 0.0;
    if (scale <= 0.0)
        return 1.0;
    return std::erf(x / (scale * std::sqrt(2.0)));
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_{std::move(samples)}
{
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const
{
    if (sorted_.empty())
        return 0.0;
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::left_limit(double x) const
{
    if (sorted_.empty())
        return 0.0;
    const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_distance(const EmpiricalCdf& sample, const CdfFunction& cdf, const CdfFunction& left_limit)
{
    if (sample.empty())
        throw std::invalid_argument("ks_distance: empty sample");
    const auto xs = sample.values();
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < xs.size()) {
        std::size_t j = i;
        while (j < xs.size() && xs[j] == xs[i])
            ++j;
        const double f = cdf(xs[i]);
        const double f_left = left_limit ? left_limit(xs[i]) : f;
        d = std::max({d, static_cast<double>(j) / n - f, f_left - static_cast<double>(i) / n});
        i = j;
    }
    return std::clamp(d, 0.0, 1.0);
}

double ks_two_sample(const EmpiricalCdf& a, const EmpiricalCdf& b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: empty sample");
    const auto xa = a.values();
    const auto xb = b.values();
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xa.size() || j < xb.size()) {
        double x;
        if (j == xb.size() || (i < xa.size() && xa[i] <= xb[j]))
            x = xa[i];
        else
            x = xb[j];
        while (i < xa.size() && xa[i] == x)
            ++i;
        while (j < xb.size() && xb[j] == x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double kolmogorov_survival(double x)
{
    if (x <= 0.0)
        return 1.0;
    if (x < 0.2)
        return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18)
            break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult make_result(double statistic, double threshold, std::size_t n, std::size_t m)
{
    return TestResult{statistic, threshold, statistic <= threshold, n, m};
}

double mean(std::span<const double> xs)
{
    if (xs.empty())
        throw std::invalid_argument("mean: empty input");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs)
{
    if (xs.size() < 2)
        throw std::invalid_argument("variance: need at least two values");
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
}

double quantile(std::vector<double> xs, double q)
{
    if (xs.empty())
        throw std::invalid_argument("quantile: empty input");
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs)
{
    return quantile(std::move(xs), 0.5);
}

double ols_slope(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("ols_slope: need two or more paired points");
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("ols_slope: degenerate abscissae");
    return sxy / sxx;
}

} // namespace arw::stats
