#ifndef ARW_CLI_COMMANDS_HPP
#define ARW_CLI_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "arw/cli/config.hpp"
#include "arw/core.hpp"

namespace arw::cli {

enum ExitCode : int { kPass = 0, kViolation = 1, kConfigError = 2, kBudgetExceeded = 3 };

// ++ Abelian property campaign +++++++++++++++++++++++++++++++++++++++++++++++

struct AbelianCampaign {
    std::uint64_t configurations = 1000;
    int orders = 5;
    std::vector<int> dims{1, 2};
    int max_side = 6;
    std::optional<std::uint32_t> cap = 8;
    InitialLaw law = InitialLaw::poisson(1.0);
    /// Per entry of `dims`, the models cycled through (same length for all).
    std::vector<std::vector<ModelParams>> models;
    std::uint64_t monotone_configurations = 500;
    std::uint64_t equivalence_configurations = 500;
    /// Negative control: one shared instruction stream instead of a tape.
    bool corrupt_tape = false;
    std::uint64_t budget = 100'000'000ULL;
};

/// ARW with lambda in {0.5, 1, inf} and the particle-hole model, symmetric
/// kernels, for each dimension.
[[nodiscard]] std::vector<std::vector<ModelParams>> default_campaign_models(const std::vector<int>& dims);

struct AbelianReport {
    std::uint64_t configurations = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t topplings = 0;
    std::uint64_t budget_exceeded = 0;
    std::uint64_t monotone_checked = 0;
    std::uint64_t monotone_violations = 0;
    std::uint64_t equivalence_checked = 0;
    std::uint64_t equivalence_mismatches = 0;
    std::optional<Json> witness;

    [[nodiscard]] bool ok() const noexcept
    {
        return mismatches == 0 && monotone_violations == 0 && equivalence_mismatches == 0 && budget_exceeded == 0;
    }
    [[nodiscard]] Json to_json() const;
};

/// Instance i of each part uses seed.child(part).with_run(i); parts are
/// 1 = order independence, 2 = monotonicity over V1 in V2 in V3, 3 = ARW
/// with lambda = inf against the particle-hole model.
[[nodiscard]] AbelianReport run_abelian_campaign(const AbelianCampaign& campaign, const SeedSpec& seed, int workers);

// ++ Entry points ++++++++++++++++++++++++++++++++++++++++++++++++++++++++++++

/// Validates `config`, runs the experiment it names and writes its outputs.
/// Returns the exit code; ConfigError is reported as kConfigError.
int run_experiment(const Json& config, std::ostream& log, std::ostream& err);

/// Command-line front end.
int run_main(int argc, char** argv);

} // namespace arw::cli

#endif
