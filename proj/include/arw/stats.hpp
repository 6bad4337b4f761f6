#ifndef ARW_STATS_HPP
#define ARW_STATS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "arw/rng.hpp"

namespace arw::stats {

// ++ Distributions +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

struct Poisson {
    double mean;
};

/// Geometric on {0, 1, 2, ...} parametrized by its mean.
struct Geometric {
    double mean;
};

struct Bernoulli {
    double p;
};

/// Two-point law: `hi` with probability `weight`, `lo` otherwise.
struct TwoPoint {
    int lo;
    int hi;
    double weight;
};

struct Normal {
    double mean;
    double sd;
};

using Distribution = std::variant<Poisson, Geometric, Bernoulli, TwoPoint, Normal>;

/// Largest Poisson mean accepted by the inversion sampler.
inline constexpr double kMaxPoissonMean = 30.0;

void validate(const Distribution& dist);
[[nodiscard]] double analytic_mean(const Distribution& dist);
[[nodiscard]] double analytic_variance(const Distribution& dist);

/// Inversion sampler for the integer-valued laws (everything but Normal).
/// The result is a deterministic function of the uniform, which keeps the
/// samplers reproducible across platforms and lets callers quantile-couple
/// draws for different parameters.
class CountSampler {
public:
    explicit CountSampler(const Distribution& dist);

    [[nodiscard]] int operator()(double u) const;

    /// P[X <= base + k] for table-driven laws; empty for the geometric law.
    [[nodiscard]] const std::vector<double>& cdf_table() const noexcept { return cdf_; }
    [[nodiscard]] int base() const noexcept { return base_; }

private:
    enum class Kind { Table, Geometric };
    Kind kind_ = Kind::Table;
    std::vector<double> cdf_;   // Table: cdf_[k] = P[X <= k], values offset by base_
    int base_ = 0;
    double log_ratio_ = 0.0;    // Geometric: log(mean / (1 + mean))
};

/// n i.i.d. draws from `dist`, deterministic in `seed`.
[[nodiscard]] std::vector<double> sample_dist(const Distribution& dist, std::size_t n, const SeedSpec& seed);

// ++ Normal and half-normal ++++++++++++++++++++++++++++++++++++++++++++++++++

[[nodiscard]] double standard_normal_cdf(double x);

/// CDF of |N(0, scale^2)|, the law of the running maximum of a Brownian
/// motion at time scale^2.
[[nodiscard]] double half_normal_cdf(double x, double scale);

// ++ Empirical CDFs and Kolmogorov-Smirnov +++++++++++++++++++++++++++++++++++

class EmpiricalCdf {
public:
    EmpiricalCdf() = default;
    explicit EmpiricalCdf(std::vector<double> samples);

    /// Right-continuous step function: fraction of samples <= x.
    [[nodiscard]] double operator()(double x) const;
    /// Left limit: fraction of samples < x.
    [[nodiscard]] double left_limit(double x) const;

    [[nodiscard]] std::size_t size() const noexcept { return sorted_.size(); }
    [[nodiscard]] bool empty() const noexcept { return sorted_.empty(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return sorted_; }

private:
    std::vector<double> sorted_;
};

using CdfFunction = std::function<double(double)>;

/// sup_x |F_n(x) - F(x)|, evaluated exactly at the jump points of F_n.
/// `left_limit` is F(x-) and defaults to F itself (continuous reference).
[[nodiscard]] double ks_distance(const EmpiricalCdf& sample, const CdfFunction& cdf,
                                 const CdfFunction& left_limit = {});

/// Two-sample statistic sup_x |F_a(x) - F_b(x)|.
[[nodiscard]] double ks_two_sample(const EmpiricalCdf& a, const EmpiricalCdf& b);

/// Asymptotic Kolmogorov tail P[sqrt(n) D_n > x].
[[nodiscard]] double kolmogorov_survival(double x);

struct TestResult {
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::size_t n = 0;
    std::size_t m = 0;   // second sample size, 0 for one-sample tests
};

[[nodiscard]] TestResult make_result(double statistic, double threshold, std::size_t n, std::size_t m = 0);

// ++ Summaries +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

[[nodiscard]] double mean(std::span<const double> xs);
/// Unbiased sample variance.
[[nodiscard]] double variance(std::span<const double> xs);
/// Linear-interpolated quantile (type 7); input need not be sorted.
[[nodiscard]] double quantile(std::vector<double> xs, double q);
[[nodiscard]] double median(std::vector<double> xs);
/// Least-squares slope of ys against xs.
[[nodiscard]] double ols_slope(std::span<const double> xs, std::span<const double> ys);

} // namespace arw::stats

#endif
