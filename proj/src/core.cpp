#include "arw/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace arw {

// ++ Box +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

Box::Box(int dim, const Coord& lo, const Coord& hi) : dim_{dim}, lo_{lo}, hi_{hi}
{
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("Box: dimension must be in [1, 3]");
    size_ = 1;
    for (int a = 0; a < kMaxDim; ++a) {
        if (a >= dim) {
            lo_[a] = hi_[a] = 0;
        }
        if (hi_[a] < lo_[a])
            throw std::invalid_argument("Box: empty window");
        stride_[a] = size_;
        size_ *= static_cast<std::size_t>(hi_[a] - lo_[a] + 1);
    }
}

Box Box::interval(std::int64_t lo, std::int64_t hi)
{
    return Box{1, {lo, 0, 0}, {hi, 0, 0}};
}

Box Box::centered(int dim, std::int64_t radius)
{
    Coord lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim && a < kMaxDim; ++a) {
        lo[a] = -radius;
        hi[a] = radius;
    }
    return Box{dim, lo, hi};
}

bool Box::contains(const Coord& c) const noexcept
{
    for (int a = 0; a < kMaxDim; ++a)
        if (c[a] < lo_[a] || c[a] > hi_[a])
            return false;
    return true;
}

bool Box::contains(const Box& other) const noexcept
{
    return other.dim_ == dim_ && contains(other.lo_) && contains(other.hi_);
}

SiteIndex Box::index_of(const Coord& c) const noexcept
{
    if (!contains(c))
        return kOutside;
    std::size_t i = 0;
    for (int a = 0; a < kMaxDim; ++a)
        i += static_cast<std::size_t>(c[a] - lo_[a]) * stride_[a];
    return i;
}

Coord Box::coord_of(SiteIndex i) const noexcept
{
    Coord c{0, 0, 0};
    for (int a = kMaxDim - 1; a >= 0; --a) {
        c[a] = lo_[a] + static_cast<std::int64_t>(i / stride_[a]);
        i %= stride_[a];
    }
    return c;
}

SiteIndex Box::neighbor(SiteIndex i, int dir) const noexcept
{
    const int axis = dir / 2;
    const std::size_t along = (i / stride_[axis]) % static_cast<std::size_t>(extent(axis));
    if (dir % 2 == 0) {
        if (along + 1 == static_cast<std::size_t>(extent(axis)))
            return kOutside;
        return i + stride_[axis];
    }
    if (along == 0)
        return kOutside;
    return i - stride_[axis];
}

Coord direction_offset(int dir) noexcept
{
    Coord c{0, 0, 0};
    c[dir / 2] = (dir % 2 == 0) ? 1 : -1;
    return c;
}

std::uint64_t site_key(const Coord& c) noexcept
{
    return hash_combine(hash_combine(static_cast<std::uint64_t>(c[0]), static_cast<std::uint64_t>(c[1])),
                        static_cast<std::uint64_t>(c[2]));
}

// ++ JumpKernel ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

JumpKernel::JumpKernel(int dim, std::vector<double> probs) : dim_{dim}, probs_{std::move(probs)}
{
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("JumpKernel: dimension must be in [1, 3]");
    if (probs_.size() != static_cast<std::size_t>(2 * dim))
        throw std::invalid_argument("JumpKernel: need one probability per nearest neighbor");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0))
            throw std::invalid_argument("JumpKernel: probabilities must be nonnegative");
        total += p;
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("JumpKernel: probabilities must sum to 1");
}

JumpKernel JumpKernel::symmetric(int dim)
{
    return JumpKernel{dim, std::vector<double>(static_cast<std::size_t>(2 * dim), 1.0 / (2.0 * dim))};
}

JumpKernel JumpKernel::biased(double p_right)
{
    if (!(p_right >= 0.0 && p_right <= 1.0))
        throw std::invalid_argument("JumpKernel: p must lie in [0, 1]");
    return JumpKernel{1, {p_right, 1.0 - p_right}};
}

int JumpKernel::pick(double u) const noexcept
{
    const double target = u * cumulative_.back();
    for (std::size_t d = 0; d + 1 < cumulative_.size(); ++d)
        if (target < cumulative_[d] && probs_[d] > 0.0)
            return static_cast<int>(d);
    // Last direction with positive mass.
    for (std::size_t d = probs_.size(); d-- > 0;)
        if (probs_[d] > 0.0)
            return static_cast<int>(d);
    return 0;
}

// ++ ModelParams +++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

ModelParams ModelParams::arw(double lambda, JumpKernel kernel)
{
    ModelParams p{Model::ARW, lambda, std::move(kernel), 0.0};
    p.validate();
    return p;
}

ModelParams ModelParams::particle_hole(JumpKernel kernel)
{
    ModelParams p{Model::ParticleHole, std::numeric_limits<double>::infinity(), std::move(kernel), 0.0};
    p.validate();
    return p;
}

ModelParams ModelParams::annihilating(JumpKernel kernel, double d_b)
{
    ModelParams p{Model::Annihilating, std::numeric_limits<double>::infinity(), std::move(kernel), d_b};
    p.validate();
    return p;
}

void ModelParams::validate() const
{
    if (model == Model::ARW && !(sleep_rate > 0.0))
        throw std::invalid_argument("ModelParams: sleep rate lambda must be > 0");
    if (model == Model::Annihilating && d_b != 0.0)
        throw std::invalid_argument("ModelParams: only D_B = 0 annihilating systems are supported");
}

bool ModelParams::infinite_sleep_rate() const noexcept
{
    return std::isinf(sleep_rate);
}

Semantics ModelParams::semantics() const noexcept
{
    if (model != Model::ARW)
        return Semantics::ParticleHole;
    return infinite_sleep_rate() ? Semantics::ArwInfinite : Semantics::ArwFinite;
}

double ModelParams::sleep_probability() const noexcept
{
    if (semantics() != Semantics::ArwFinite)
        return 0.0;
    return sleep_rate / (1.0 + sleep_rate);
}

double ModelParams::clock_rate_per_particle() const noexcept
{
    return semantics() == Semantics::ArwFinite ? 1.0 + sleep_rate : 1.0;
}

std::string to_string(Model m)
{
    switch (m) {
    case Model::ARW: return "arw";
    case Model::ParticleHole: return "particle-hole";
    case Model::Annihilating: return "annihilating";
    }
    return "?";
}

std::string to_string(Semantics s)
{
    switch (s) {
    case Semantics::ArwFinite: return "arw";
    case Semantics::ArwInfinite: return "arw-inf";
    case Semantics::ParticleHole: return "particle-hole";
    }
    return "?";
}

Model parse_model(const std::string& name)
{
    if (name == "arw")
        return Model::ARW;
    if (name == "particle-hole")
        return Model::ParticleHole;
    if (name == "annihilating")
        return Model::Annihilating;
    throw std::invalid_argument("unknown model '" + name + "'");
}

// ++ SiteState / Configuration +++++++++++++++++++++++++++++++++++++++++++++++

SiteState::Tag SiteState::tag() const noexcept
{
    if (active > 0)
        return Tag::Active;
    switch (marker) {
    case Marker::Sleeping: return Tag::Sleeping;
    case Marker::Settled: return Tag::Settled;
    case Marker::None: break;
    }
    return Tag::Empty;
}

Configuration::Configuration(Box window)
    : window_{window}, sites_(window.size()), exited_(static_cast<std::size_t>(2 * window.dim()), 0)
{
}

Configuration Configuration::from_counts(Box window, const std::vector<std::uint32_t>& counts)
{
    Configuration c{window};
    if (counts.size() != c.size())
        throw std::invalid_argument("Configuration: count vector does not match the window");
    for (std::size_t i = 0; i < counts.size(); ++i)
        c.sites_[i].active = counts[i];
    return c;
}

const SiteState& Configuration::at(const Coord& c) const
{
    const auto i = window_.index_of(c);
    if (i == kOutside)
        throw std::out_of_range("Configuration: site outside the window");
    return sites_[i];
}

SiteState& Configuration::at(const Coord& c)
{
    const auto i = window_.index_of(c);
    if (i == kOutside)
        throw std::out_of_range("Configuration: site outside the window");
    return sites_[i];
}

std::uint64_t Configuration::exited_total() const noexcept
{
    return std::accumulate(exited_.begin(), exited_.end(), std::uint64_t{0});
}

std::uint64_t Configuration::particles_inside() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& s : sites_)
        n += s.particles();
    return n;
}

std::vector<std::uint32_t> Configuration::counts() const
{
    std::vector<std::uint32_t> out;
    out.reserve(sites_.size());
    for (const auto& s : sites_)
        out.push_back(s.particles());
    return out;
}

std::uint64_t apply_initial_settling(Configuration& config, const ModelParams& params)
{
    std::uint64_t settled = 0;
    const auto semantics = params.semantics();
    if (semantics == Semantics::ArwFinite)
        return 0;
    for (std::size_t i = 0; i < config.size(); ++i) {
        auto& s = config[i];
        if (semantics == Semantics::ParticleHole) {
            // Particles are exchangeable, so "one chosen uniformly" only
            // matters for labelled trajectories.
            if (s.active > 0 && s.marker == Marker::None) {
                --s.active;
                s.marker = Marker::Settled;
                ++settled;
            }
        } else if (s.active == 1 && s.marker == Marker::None) {
            s.active = 0;
            s.marker = Marker::Settled;
            ++settled;
        }
    }
    return settled;
}

bool is_stable_at(const Configuration& config, const Coord& x, const ModelParams&)
{
    return config.at(x).stable();
}

DensityStats density_stats(const Configuration& config)
{
    DensityStats d;
    d.sites = config.size();
    for (const auto& s : config.sites()) {
        d.active += s.active;
        d.sleeping += (s.marker == Marker::Sleeping);
        d.settled += (s.marker == Marker::Settled);
        d.unfilled_holes += (s.marker != Marker::Settled);
    }
    return d;
}

// ++ InitialLaw ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

InitialLaw InitialLaw::poisson(double mean)
{
    InitialLaw law;
    law.kind_ = Kind::Poisson;
    law.dist_ = stats::Poisson{mean};
    law.sampler_.emplace(*law.dist_);
    law.mean_ = mean;
    law.variance_ = stats::analytic_variance(*law.dist_);
    return law;
}

InitialLaw InitialLaw::geometric(double mean)
{
    InitialLaw law;
    law.kind_ = Kind::Geometric;
    law.dist_ = stats::Geometric{mean};
    law.sampler_.emplace(*law.dist_);
    law.mean_ = mean;
    law.variance_ = stats::analytic_variance(*law.dist_);
    return law;
}

InitialLaw InitialLaw::bernoulli_mixture(int lo, int hi, double weight)
{
    InitialLaw law;
    law.kind_ = Kind::BernoulliMixture;
    law.dist_ = stats::TwoPoint{lo, hi, weight};
    law.sampler_.emplace(*law.dist_);
    law.mean_ = stats::analytic_mean(*law.dist_);
    law.variance_ = stats::analytic_variance(*law.dist_);
    return law;
}

InitialLaw InitialLaw::deterministic(std::vector<std::uint32_t> counts)
{
    InitialLaw law;
    law.kind_ = Kind::Deterministic;
    law.counts_ = std::move(counts);
    if (law.counts_.empty())
        throw std::invalid_argument("InitialLaw: deterministic law needs at least one site");
    double sum = 0.0;
    for (auto c : law.counts_)
        sum += c;
    law.mean_ = sum / static_cast<double>(law.counts_.size());
    law.variance_ = 0.0;
    return law;
}

std::uint32_t InitialLaw::draw(double u) const
{
    if (!sampler_)
        throw std::logic_error("InitialLaw: deterministic law has no sampler");
    return static_cast<std::uint32_t>((*sampler_)(u));
}

std::string InitialLaw::describe() const
{
    std::ostringstream os;
    switch (kind_) {
    case Kind::Poisson: os << "poisson(" << mean_ << ")"; break;
    case Kind::Geometric: os << "geometric(" << mean_ << ")"; break;
    case Kind::BernoulliMixture: {
        const auto& d = std::get<stats::TwoPoint>(*dist_);
        os << "two-point(" << d.lo << "," << d.hi << "," << d.weight << ")";
        break;
    }
    case Kind::Deterministic: os << "deterministic[" << counts_.size() << "]"; break;
    }
    return os.str();
}

Configuration sample_initial(const InitialLaw& law, const Box& window, const SeedSpec& seed,
                             std::optional<std::uint32_t> cap)
{
    if (law.kind() == InitialLaw::Kind::Deterministic) {
        auto config = Configuration::from_counts(window, law.counts());
        if (cap)
            for (std::size_t i = 0; i < config.size(); ++i)
                config[i].active = std::min(config[i].active, *cap);
        return config;
    }
    Configuration config{window};
    const CounterRng rng{seed.stream(Purpose::InitialConfig)};
    for (std::size_t i = 0; i < config.size(); ++i) {
        const auto k = law.draw(rng.uniform(site_key(window.coord_of(i)), 0));
        config[i].active = cap ? std::min(k, *cap) : k;
    }
    return config;
}

} // namespace arw
