#ifndef ARW_CLI_OUTPUT_HPP
#define ARW_CLI_OUTPUT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "arw/cli/config.hpp"

namespace arw::cli {

[[nodiscard]] std::string sha256_hex(std::string_view data);

/// %.17g: round-trips every double.
[[nodiscard]] std::string format_double(double x);

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string, bool>;

/// Column-oriented table rendered as CSV (header row, "\n" endings, first
/// line "# manifest=<hash>") or as a JSON object with the same content.
class Table {
public:
    explicit Table(std::vector<std::string> columns);

    void add(std::vector<Cell> row);
    [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }

    [[nodiscard]] std::string csv(const std::string& manifest_hash) const;
    [[nodiscard]] Json json(const std::string& manifest_hash) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

/// Collects the files of one command invocation and writes them together
/// with manifest.json, which lists their SHA-256 digests.
class OutputSet {
public:
    OutputSet(std::filesystem::path dir, std::string manifest_hash, Format format);

    [[nodiscard]] const std::string& manifest_hash() const noexcept { return hash_; }

    /// Writes `stem`.csv or `stem`.json depending on the format.
    void table(const std::string& stem, const Table& table);
    /// Writes `stem`.json; the manifest hash is added to the object.
    void report(const std::string& stem, Json report);

    /// Writes manifest.json; `manifest` gets the digests and the hash.
    void finish(Json manifest);

    [[nodiscard]] const std::map<std::string, std::string>& digests() const noexcept { return digests_; }

private:
    void write(const std::string& name, const std::string& content);

    std::filesystem::path dir_;
    std::string hash_;
    Format format_;
    std::map<std::string, std::string> digests_;
};

/// Hash of everything that determines the outputs: the canonical config
/// (overrides applied; "workers" and "output" removed) and the code version.
[[nodiscard]] std::string manifest_hash(const Json& config, const std::string& version);

} // namespace arw::cli

#endif
