#pragma once

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "artifacts.hpp"
#include "config.hpp"

namespace schrolab::cli {

struct Run {
    ExperimentConfig& cfg;
    OutputSet& out;
    std::mt19937_64 rng;
    nlohmann::json results = nlohmann::json::object();
    nlohmann::json checks = nlohmann::json::array();
    bool failed = false;
    std::string stdout_text;  // printed instead of the results when set

    Run(ExperimentConfig& c, OutputSet& o);

    long long i(const std::string& id) const { return cfg.integer(id); }
    double r(const std::string& id) const { return cfg.real(id); }
    std::string t(const std::string& id) const { return cfg.text(id); }

    // Records an asserted invariant; a failed one turns the exit code into 3.
    void check(const std::string& name, double value, const std::string& relation, double limit);
};

struct ExperimentDef {
    std::string name;
    std::string help;
    std::vector<std::string> keys;
    std::map<std::string, std::string> defaults;
    std::function<void(Run&)> run;

    ExperimentConfig make_config() const { return {name, keys, defaults}; }
};

const std::vector<ExperimentDef>& experiments();
const ExperimentDef& experiment(const std::string& name);

}  // namespace schrolab::cli
