#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "schrolab/errors.hpp"

namespace schrolab::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void check_value(const KeyDef& k, const std::string& v) {
    if (k.type == KeyType::Text) {
        if (v.find('\n') != std::string::npos || v.find('#') != std::string::npos)
            throw ConfigError(k.id() + ": text values may not contain '#' or newlines");
        return;
    }
    const char* b = v.data();
    const char* e = b + v.size();
    if (k.type == KeyType::Int) {
        long long x = 0;
        auto r = std::from_chars(b, e, x);
        if (r.ec != std::errc() || r.ptr != e) throw ConfigError(k.id() + ": expected an integer, got '" + v + "'");
    } else {
        double x = 0;
        auto r = std::from_chars(b, e, x);
        if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x))
            throw ConfigError(k.id() + ": expected a finite real, got '" + v + "'");
    }
}

std::vector<KeyDef> build_registry() {
    const std::string quarter = format_real(std::numbers::pi / 2.0);
    return {
        {"experiment", "kind", KeyType::Text, "", "experiment kind"},
        {"experiment", "seed", KeyType::Int, "1", "seed of the single random generator"},
        {"experiment", "output", KeyType::Text, "", "output directory (default schrolab_out/<kind>)"},

        {"lattice", "n", KeyType::Int, "1", "space dimension"},
        {"lattice", "N", KeyType::Int, "16", "mode truncation per axis"},
        {"lattice", "M", KeyType::Int, "32", "time-frequency band of space-time fields"},

        {"model", "s", KeyType::Real, "0", "Sobolev index"},
        {"model", "b", KeyType::Real, "0.625", "Bourgain time index"},
        {"model", "T", KeyType::Real, "1", "control or probe horizon"},
        {"model", "alpha", KeyType::Int, "2", "nonlinearity degree minus one"},
        {"model", "alpha1", KeyType::Int, "2", "power of u"},
        {"model", "alpha2", KeyType::Int, "1", "power of conj(u)"},
        {"model", "lambda", KeyType::Real, "1", "coupling constant"},
        {"model", "epsilon", KeyType::Real, "1", "boundary controller width"},
        {"model", "order", KeyType::Int, "3", "boundary controller smoothness order"},
        {"model", "delta", KeyType::Real, "0.001", "data size (or convex weight parameter)"},
        {"model", "frames", KeyType::Int, "64", "output samples in time"},
        {"model", "tmax", KeyType::Real, "0", "final time (0: automatic)"},

        {"control", "a_profile", KeyType::Text, "bump", "damping/control profile: bump, constant, none"},
        {"control", "a_width", KeyType::Real, quarter, "bump width"},
        {"control", "a_height", KeyType::Real, "1", "profile height"},
        {"control", "a_modes", KeyType::Int, "16", "Fourier modes of the profile"},
        {"control", "faces", KeyType::Text, "", "active boundary faces, comma separated (empty: all)"},
        {"control", "face", KeyType::Int, "0", "Neumann control face"},
        {"control", "bc", KeyType::Text, "periodic", "periodic, dirichlet or neumann"},
        {"control", "mode", KeyType::Text, "internal", "internal or boundary control"},
        {"control", "decay", KeyType::Real, "2", "random data amplitudes ~ <k>^{-decay}"},

        {"probe", "kind", KeyType::Text, "homogeneous", "probe kind"},
        {"probe", "samples", KeyType::Int, "32", "Monte-Carlo samples"},
        {"probe", "sigma_max", KeyType::Real, "8", "detuning range of near-free samples"},
        {"probe", "decay", KeyType::Real, "1", "probe amplitudes ~ <k>^{-s-decay}"},
        {"probe", "window_order", KeyType::Int, "1", "cutoff ramp order"},
        {"probe", "b_prime", KeyType::Real, "-0.45", "output time index of the bilinear probe"},
        {"probe", "field", KeyType::Text, "convex", "multiplier field: convex or linear"},

        {"sums", "sum", KeyType::Text, "resonance", "lattice sum: resonance, moment or shifted"},
        {"sums", "gamma", KeyType::Real, "1", "resonance sum exponent"},
        {"sums", "lambda_max", KeyType::Real, "32", "resonance sum parameter range"},
        {"sums", "lambda_step", KeyType::Real, "0.5", "resonance sum parameter step"},
        {"sums", "k_max", KeyType::Int, "10000", "resonance sum truncation"},
        {"sums", "k", KeyType::Real, "3", "decay exponent of the moment and shifted sums"},
        {"sums", "p_max", KeyType::Int, "32", "moment sum outer range"},
        {"sums", "q_max", KeyType::Int, "256", "moment sum truncation"},
        {"sums", "sigma", KeyType::Real, "0", "shifted sum growth exponent"},
        {"sums", "n_max", KeyType::Int, "64", "shifted sum range"},
        {"sums", "m_max", KeyType::Int, "100000", "shifted sum truncation"},

        {"tolerance", "residual", KeyType::Real, "1e-8", "endpoint residual bound"},
        {"tolerance", "replay", KeyType::Real, "1e-6", "independent replay bound"},
        {"tolerance", "contraction", KeyType::Real, "0.55", "largest accepted contraction factor"},
        {"tolerance", "rate", KeyType::Real, "0.1", "relative decay-rate agreement"},
        {"tolerance", "stability", KeyType::Real, "0.05", "relative refinement change of probe maxima"},
        {"tolerance", "identity", KeyType::Real, "1e-5", "multiplier identity residual bound"},
    };
}

}  // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string KeyDef::flag() const {
    std::string f = name;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

const std::vector<KeyDef>& key_registry() {
    static const std::vector<KeyDef> reg = build_registry();
    return reg;
}

const KeyDef& key(const std::string& id) {
    for (const auto& k : key_registry())
        if (k.id() == id) return k;
    throw ConfigError("unknown key '" + id + "'");
}

ExperimentConfig::ExperimentConfig(std::string kind, std::vector<std::string> keys,
                                   std::map<std::string, std::string> defaults)
    : kind_(std::move(kind)), keys_(std::move(keys)), defaults_(std::move(defaults)) {
    for (const auto& k : {"experiment.seed", "experiment.output"})
        if (!uses(k)) keys_.insert(keys_.begin(), k);
    for (const auto& id : keys_) key(id);
    for (const auto& [id, v] : defaults_) check_value(key(id), v);
}

bool ExperimentConfig::uses(const std::string& id) const {
    return std::find(keys_.begin(), keys_.end(), id) != keys_.end();
}

void ExperimentConfig::set(const std::string& id, const std::string& value) {
    const auto& k = key(id);
    if (!uses(id)) throw ConfigError("key '" + id + "' is not used by experiment '" + kind_ + "'");
    const std::string v = trim(value);
    check_value(k, v);
    values_[id] = v;
}

void ExperimentConfig::set_real(const std::string& id, double v) { set(id, format_real(v)); }

std::string ExperimentConfig::raw(const std::string& id) const {
    if (!uses(id)) throw ConfigError("experiment '" + kind_ + "' does not use key '" + id + "'");
    if (auto it = values_.find(id); it != values_.end()) return it->second;
    if (auto it = defaults_.find(id); it != defaults_.end()) return it->second;
    return key(id).fallback;
}

std::string ExperimentConfig::text(const std::string& id) const { return raw(id); }

long long ExperimentConfig::integer(const std::string& id) const {
    if (key(id).type != KeyType::Int) throw ConfigError(id + " is not an integer key");
    return std::stoll(raw(id));
}

double ExperimentConfig::real(const std::string& id) const {
    const auto& k = key(id);
    if (k.type == KeyType::Text) throw ConfigError(id + " is not numeric");
    const std::string v = raw(id);
    double x = 0;
    std::from_chars(v.data(), v.data() + v.size(), x);
    return x;
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os << "[experiment]\nkind = " << kind_ << "\n";
    std::string section = "experiment";
    for (const auto& k : key_registry()) {
        if (!uses(k.id())) continue;
        if (k.section != section) {
            section = k.section;
            os << "\n[" << section << "]\n";
        }
        os << k.name << " = " << raw(k.id()) << "\n";
    }
    return os.str();
}

void ExperimentConfig::merge_text(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const auto& k : key_registry()) known = known || k.section == section;
            if (!known) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'name = value'");
        if (section.empty()) throw ConfigError(where + "key outside of a section");
        const std::string name = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string id = section + "." + name;
        if (seen.count(id)) throw ConfigError(where + "duplicate key '" + id + "'");
        seen[id] = lineno;
        if (id == "experiment.kind") {
            if (value != kind_) throw ConfigError(where + "config is for '" + value + "', not '" + kind_ + "'");
            continue;
        }
        try {
            set(id, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
}

std::string kind_of(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line, section;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (section == "experiment" && eq != std::string::npos && trim(line.substr(0, eq)) == "kind")
            return trim(line.substr(eq + 1));
    }
    throw ConfigError(origin + ": no [experiment] kind");
}

}  // namespace schrolab::cli
