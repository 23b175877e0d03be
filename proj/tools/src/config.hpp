#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace schrolab::cli {

enum class KeyType { Int, Real, Text };

struct KeyDef {
    std::string section;
    std::string name;
    KeyType type;
    std::string fallback;  // default, in file syntax
    std::string help;

    std::string id() const { return section + "." + name; }
    std::string flag() const;  // --name with '_' -> '-'
};

const std::vector<KeyDef>& key_registry();
const KeyDef& key(const std::string& id);

// Experiment configuration: kind, seed, output directory and the typed parameters used by
// that kind.  Text form: [section] headers, "name = value" lines, '#' comments.
class ExperimentConfig {
public:
    ExperimentConfig() = default;
    ExperimentConfig(std::string kind, std::vector<std::string> keys, std::map<std::string, std::string> defaults);

    const std::string& kind() const { return kind_; }
    const std::vector<std::string>& keys() const { return keys_; }
    bool uses(const std::string& id) const;
    bool explicitly_set(const std::string& id) const { return values_.count(id) != 0; }

    // Value in file syntax, validated against the key type.
    void set(const std::string& id, const std::string& value);
    void set_real(const std::string& id, double v);
    std::string text(const std::string& id) const;
    long long integer(const std::string& id) const;
    double real(const std::string& id) const;
    std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("experiment.seed")); }

    std::string serialize() const;
    // Merges a config file into this one; the file's [experiment] kind must match.
    void merge_text(const std::string& text, const std::string& origin);

private:
    std::string raw(const std::string& id) const;

    std::string kind_;
    std::vector<std::string> keys_;
    std::map<std::string, std::string> defaults_;
    std::map<std::string, std::string> values_;
};

// Kind named in a config text ([experiment] kind = ...).
std::string kind_of(const std::string& text, const std::string& origin);

std::string format_real(double v);

}  // namespace schrolab::cli
