#ifndef ARW_RNG_HPP
#define ARW_RNG_HPP

#include <cstdint>
#include <random>

namespace arw {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept
{
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Maps 64 random bits to a double in [0, 1) with 53 bits of resolution.
constexpr double to_unit(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// What a derived random stream is used for. Distinct purposes never share
/// bits, so adding a consumer never perturbs the existing ones.
enum class Purpose : std::uint64_t {
    InitialConfig = 1,
    Tape = 2,
    Clock = 3,
    Order = 4,
    Walk = 5,
    Flow = 6,
    Reference = 7,
    Sampling = 8,
    Campaign = 9,
};

/// Seed of one simulation run. Every stream consumed by the run is derived
/// from (master_seed, run_index, purpose) alone, so the output of a run does
/// not depend on which other runs execute or in what order.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t run_index = 0;

    [[nodiscard]] constexpr std::uint64_t stream(Purpose purpose) const noexcept
    {
        return hash_combine(hash_combine(master_seed, run_index), static_cast<std::uint64_t>(purpose));
    }

    /// A child seed for nested campaigns (e.g. one per grid point).
    [[nodiscard]] constexpr SeedSpec child(std::uint64_t salt) const noexcept
    {
        return SeedSpec{hash_combine(stream(Purpose::Campaign), salt), 0};
    }

    [[nodiscard]] constexpr SeedSpec with_run(std::uint64_t run) const noexcept
    {
        return SeedSpec{master_seed, run};
    }

    [[nodiscard]] std::mt19937_64 engine(Purpose purpose) const
    {
        return std::mt19937_64{stream(purpose)};
    }

    friend constexpr bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Counter-based generator: the value at (site, counter) is a pure function
/// of the key, so lazily sampled per-site streams are independent of the
/// order in which sites are visited.
class CounterRng {
public:
    constexpr CounterRng() = default;
    constexpr explicit CounterRng(std::uint64_t key) noexcept : key_{key} {}

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t site, std::uint64_t counter) const noexcept
    {
        return mix64(hash_combine(key_ ^ 0xd1b54a32d192ed03ULL, site) ^ mix64(counter));
    }

    [[nodiscard]] constexpr double uniform(std::uint64_t site, std::uint64_t counter) const noexcept
    {
        return to_unit(bits(site, counter));
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_ = 0;
};

/// Sequential SplitMix64 generator; a UniformRandomBitGenerator for hot
/// loops where std::mt19937_64 dominates the cost.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept
    {
        const auto out = mix64(state_);
        state_ += 0x9e3779b97f4a7c15ULL;
        return out;
    }

private:
    std::uint64_t state_;
};

/// Uniform double in [0, 1) from any 64-bit engine.
template <class Engine>
double uniform01(Engine& engine)
{
    return to_unit(engine());
}

/// Uniform integer in [0, n) by 128-bit multiply (Lemire, without the
/// rejection step; bias is below 2^-64 * n).
template <class Engine>
std::uint64_t uniform_index(Engine& engine, std::uint64_t n)
{
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(engine()) * n) >> 64);
}

} // namespace arw

#endif
