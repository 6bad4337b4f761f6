#include "arw/cli/output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace arw::cli {

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string render(const Cell& c)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>)
                return format_double(v);
            else if constexpr (std::is_same_v<T, std::string>)
                return v;
            else if constexpr (std::is_same_v<T, bool>)
                return v ? "true" : "false";
            else
                return std::to_string(v);
        },
        c);
}

Json to_json(const Cell& c)
{
    return std::visit([](const auto& v) { return Json(v); }, c);
}

} // namespace

Table::Table(std::vector<std::string> columns) : columns_{std::move(columns)} {}

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns_.size())
        throw std::logic_error("Table: row width differs from header");
    rows_.push_back(std::move(row));
}

std::string Table::csv(const std::string& manifest_hash) const
{
    std::string out = "# manifest=" + manifest_hash + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
        out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + render(row[i]);
        out += "\n";
    }
    return out;
}

Json Table::json(const std::string& manifest_hash) const
{
    Json rows = Json::array();
    for (const auto& row : rows_) {
        Json r = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            r[columns_[i]] = to_json(row[i]);
        rows.push_back(std::move(r));
    }
    return Json{{"manifest_hash", manifest_hash}, {"columns", columns_}, {"rows", std::move(rows)}};
}

OutputSet::OutputSet(std::filesystem::path dir, std::string manifest_hash, Format format)
    : dir_{std::move(dir)}, hash_{std::move(manifest_hash)}, format_{format}
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& content)
{
    const auto path = dir_ / name;
    std::ofstream out{path, std::ios::binary};
    if (!out || !(out << content))
        throw std::runtime_error("cannot write '" + path.string() + "'");
    digests_[name] = sha256_hex(content);
}

void OutputSet::table(const std::string& stem, const Table& table)
{
    if (format_ == Format::Csv)
        write(stem + ".csv", table.csv(hash_));
    else
        write(stem + ".json", table.json(hash_).dump(2) + "\n");
}

void OutputSet::report(const std::string& stem, Json report)
{
    report["manifest_hash"] = hash_;
    write(stem + ".json", report.dump(2) + "\n");
}

void OutputSet::finish(Json manifest)
{
    manifest["manifest_hash"] = hash_;
    manifest["outputs"] = digests_;
    const auto path = dir_ / "manifest.json";
    std::ofstream out{path, std::ios::binary};
    if (!out || !(out << manifest.dump(2) << "\n"))
        throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string manifest_hash(const Json& config, const std::string& version)
{
    Json canonical = config;
    canonical.erase("workers");
    canonical.erase("output");
    return sha256_hex(canonical.dump() + "\n" + version);
}

} // namespace arw::cli
