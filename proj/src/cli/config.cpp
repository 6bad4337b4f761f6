#include "arw/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace arw::cli {

Section::Section(const Json& node, std::string path) : node_{node}, path_{std::move(path)}
{
    if (!node_.is_object())
        throw ConfigError(path_ + ": expected an object");
}

void Section::fail(const std::string& key, const std::string& what) const
{
    throw ConfigError(path_ + "." + key + ": " + what);
}

bool Section::has(const std::string& key) const
{
    return node_.contains(key);
}

const Json& Section::raw(const std::string& key)
{
    if (!node_.contains(key))
        fail(key, "required key is missing");
    used_.insert(key);
    return node_.at(key);
}

Section Section::child(const std::string& key)
{
    return Section{raw(key), path_ + "." + key};
}

namespace {

double as_rate(const Json& v, const Section& s, const std::string& key)
{
    if (v.is_string()) {
        const auto text = v.get<std::string>();
        if (text == "inf" || text == "infinity")
            return std::numeric_limits<double>::infinity();
        s.fail(key, "expected a number or \"inf\"");
    }
    if (!v.is_number())
        s.fail(key, "expected a number or \"inf\"");
    return v.get<double>();
}

} // namespace

double Section::number(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_number())
        fail(key, "expected a number");
    return v.get<double>();
}

double Section::number(const std::string& key, double fallback)
{
    return has(key) ? number(key) : fallback;
}

double Section::rate(const std::string& key)
{
    return as_rate(raw(key), *this, key);
}

double Section::rate(const std::string& key, double fallback)
{
    return has(key) ? rate(key) : fallback;
}

std::int64_t Section::integer(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_number_integer())
        fail(key, "expected an integer");
    return v.get<std::int64_t>();
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback)
{
    return has(key) ? integer(key) : fallback;
}

std::uint64_t Section::unsigned_integer(const std::string& key, std::uint64_t fallback)
{
    if (!has(key))
        return fallback;
    const auto& v = raw(key);
    // Parsed JSON stores 5 as unsigned, but a document built in code stores it signed.
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

bool Section::boolean(const std::string& key, bool fallback)
{
    if (!has(key))
        return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean())
        fail(key, "expected true or false");
    return v.get<bool>();
}

std::string Section::string(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_string())
        fail(key, "expected a string");
    return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback)
{
    return has(key) ? string(key) : fallback;
}

std::vector<double> Section::numbers(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_array())
        fail(key, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number())
            fail(key, "expected a list of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<double> Section::rates(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_array())
        fail(key, "expected a list");
    std::vector<double> out;
    for (const auto& x : v)
        out.push_back(as_rate(x, *this, key));
    return out;
}

std::vector<std::int64_t> Section::integers(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_array())
        fail(key, "expected a list of integers");
    std::vector<std::int64_t> out;
    for (const auto& x : v) {
        if (!x.is_number_integer())
            fail(key, "expected a list of integers");
        out.push_back(x.get<std::int64_t>());
    }
    return out;
}

std::vector<std::string> Section::strings(const std::string& key)
{
    const auto& v = raw(key);
    if (!v.is_array())
        fail(key, "expected a list of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
        if (!x.is_string())
            fail(key, "expected a list of strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

std::vector<double> Section::grid(const std::string& key)
{
    if (has(key) && raw(key).is_array())
        return numbers(key);
    auto g = child(key);
    const double start = g.number("start");
    const double stop = g.number("stop");
    const double step = g.number("step");
    g.finish();
    if (!(step > 0.0) || stop < start)
        fail(key, "need step > 0 and stop >= start");
    std::vector<double> out;
    const auto n = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9));
    // Grid points are start + k * step, rounded to 12 decimals so that
    // 0.02 * 25 prints as 0.5.
    for (std::int64_t k = 0; k <= n; ++k)
        out.push_back(std::round((start + static_cast<double>(k) * step) * 1e12) / 1e12);
    return out;
}

void Section::finish() const
{
    for (auto it = node_.begin(); it != node_.end(); ++it)
        if (!used_.count(it.key()))
            fail(it.key(), "unknown key");
}

Json load_config(const std::filesystem::path& file, const Overrides& overrides)
{
    std::ifstream in{file};
    if (!in)
        throw ConfigError("cannot open config file '" + file.string() + "'");
    Json config;
    try {
        config = Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config '" + file.string() + "' is not valid JSON: " + e.what());
    }
    if (!config.is_object())
        throw ConfigError("config: top level must be an object");
    if (overrides.seed)
        config["seed"] = *overrides.seed;
    if (overrides.workers)
        config["workers"] = *overrides.workers;
    if (overrides.out)
        config["output"]["dir"] = *overrides.out;
    if (overrides.format)
        config["output"]["format"] = *overrides.format;
    return config;
}

RunSettings read_settings(Section& root)
{
    RunSettings s;
    s.experiment = root.string("experiment");
    s.master_seed = root.unsigned_integer("seed", 0);
    s.workers = static_cast<int>(root.integer("workers", 1));
    if (s.workers < 1)
        root.fail("workers", "must be >= 1");
    if (root.has("output")) {
        auto out = root.child("output");
        s.out = out.string("dir", "out");
        const auto fmt = out.string("format", "csv");
        if (fmt == "csv")
            s.format = Format::Csv;
        else if (fmt == "json")
            s.format = Format::Json;
        else
            out.fail("format", "expected \"csv\" or \"json\"");
        out.finish();
    }
    return s;
}

ModelParams read_model(Section section, int dim)
{
    const auto name = section.string("name");
    Model model;
    try {
        model = parse_model(name);
    } catch (const std::invalid_argument& e) {
        section.fail("name", e.what());
    }

    JumpKernel kernel = JumpKernel::symmetric(dim);
    if (section.has("kernel")) {
        auto k = section.child("kernel");
        const auto kind = k.string("kind");
        if (kind == "biased") {
            if (dim != 1)
                k.fail("kind", "a biased kernel needs dim = 1");
            const double p = k.number("p");
            if (!(p >= 0.0 && p <= 1.0))
                k.fail("p", "must lie in [0, 1]");
            kernel = JumpKernel::biased(p);
        } else if (kind != "symmetric") {
            k.fail("kind", "expected \"symmetric\" or \"biased\"");
        }
        k.finish();
    }

    ModelParams params;
    try {
        switch (model) {
        case Model::ARW: params = ModelParams::arw(section.rate("lambda"), kernel); break;
        case Model::ParticleHole: params = ModelParams::particle_hole(kernel); break;
        case Model::Annihilating: params = ModelParams::annihilating(kernel, section.number("d_b", 0.0)); break;
        }
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(section.path() + ": " + e.what());
    }
    section.finish();
    return params;
}

InitialLaw read_law(Section section)
{
    const auto kind = section.string("kind");
    try {
        InitialLaw law = [&] {
            if (kind == "poisson")
                return InitialLaw::poisson(section.number("mean"));
            if (kind == "geometric")
                return InitialLaw::geometric(section.number("mean"));
            if (kind == "bernoulli-mixture")
                return InitialLaw::bernoulli_mixture(static_cast<int>(section.integer("lo")),
                                                     static_cast<int>(section.integer("hi")),
                                                     section.number("weight"));
            if (kind == "constant") {
                const auto v = static_cast<int>(section.integer("value"));
                return InitialLaw::bernoulli_mixture(v, v + 1, 0.0);
            }
            section.fail("kind", "expected poisson, geometric, bernoulli-mixture or constant");
        }();
        section.finish();
        return law;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(section.path() + ": " + e.what());
    }
}

std::string format_name(Format f)
{
    return f == Format::Csv ? "csv" : "json";
}

} // namespace arw::cli
