#ifndef ARW_CLI_CONFIG_HPP
#define ARW_CLI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "arw/core.hpp"

namespace arw::cli {

using Json = nlohmann::json;

/// Schema or value error in an experiment config; maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Typed view of one JSON object. Every key read is recorded, and finish()
/// rejects keys that were never read, so typos fail before any run.
class Section {
public:
    Section(const Json& node, std::string path);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] const Json& raw(const std::string& key);
    [[nodiscard]] Section child(const std::string& key);

    [[nodiscard]] double number(const std::string& key);
    [[nodiscard]] double number(const std::string& key, double fallback);
    /// A positive number or the string "inf".
    [[nodiscard]] double rate(const std::string& key);
    [[nodiscard]] double rate(const std::string& key, double fallback);
    [[nodiscard]] std::int64_t integer(const std::string& key);
    [[nodiscard]] std::int64_t integer(const std::string& key, std::int64_t fallback);
    [[nodiscard]] std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
    [[nodiscard]] bool boolean(const std::string& key, bool fallback);
    [[nodiscard]] std::string string(const std::string& key);
    [[nodiscard]] std::string string(const std::string& key, const std::string& fallback);
    [[nodiscard]] std::vector<double> numbers(const std::string& key);
    [[nodiscard]] std::vector<double> rates(const std::string& key);
    [[nodiscard]] std::vector<std::int64_t> integers(const std::string& key);
    [[nodiscard]] std::vector<std::string> strings(const std::string& key);
    /// Either a list of numbers or {"start", "stop", "step"} (inclusive).
    [[nodiscard]] std::vector<double> grid(const std::string& key);

    void finish() const;
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

private:
    const Json& node_;
    std::string path_;
    std::set<std::string> used_;
};

enum class Format { Csv, Json };

/// Settings shared by every subcommand.
struct RunSettings {
    std::string experiment;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::filesystem::path out = "out";
    Format format = Format::Csv;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

/// Parses the file and applies overrides to the JSON itself, so the config
/// hash covers exactly what runs. Throws ConfigError.
[[nodiscard]] Json load_config(const std::filesystem::path& file, const Overrides& overrides);

/// Reads "experiment", "seed", "workers" and "output" from `root`.
[[nodiscard]] RunSettings read_settings(Section& root);

/// {"name": "arw" | "particle-hole" | "annihilating", "lambda": x | "inf",
///  "kernel": {"kind": "symmetric"} | {"kind": "biased", "p": x}}.
[[nodiscard]] ModelParams read_model(Section section, int dim);

/// {"kind": "poisson" | "geometric", "mean": x},
/// {"kind": "bernoulli-mixture", "lo": a, "hi": b, "weight": w},
/// {"kind": "constant", "value": k}.
[[nodiscard]] InitialLaw read_law(Section section);

[[nodiscard]] std::string format_name(Format f);

} // namespace arw::cli

#endif
