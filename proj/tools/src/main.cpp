#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "artifacts.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "schrolab/errors.hpp"

using namespace schrolab;
using namespace schrolab::cli;
using nlohmann::json;

namespace {

struct Bound {
    const ExperimentDef* def = nullptr;
    CLI::App* app = nullptr;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config;
};

std::string names_for(const KeyDef& k) {
    if (k.id() == "control.a_profile") return "--a,--a-profile";
    if (k.id() == "experiment.output") return "-o,--output";
    return k.flag();
}

void bind(Bound& b) {
    b.app->add_option("--config", b.config, "config file (command-line options override it)")->check(CLI::ExistingFile);
    auto keys = b.def->make_config().keys();
    for (const auto& id : keys) {
        const auto& k = key(id);
        std::string help = k.help + " [" + b.def->make_config().text(id) + "]";
        b.options[id] = b.app->add_option(names_for(k), b.values[id], help);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void diagnose(const std::string& kind, const std::string& message, const json& extra = json::object()) {
    json j = {{"error", kind}, {"message", message}};
    j.update(extra);
    std::cerr << j.dump() << "\n";
}

int execute(const ExperimentDef& def, ExperimentConfig cfg) {
    std::string outdir = cfg.text("experiment.output");
    if (outdir.empty()) outdir = "schrolab_out/" + def.name;
    OutputSet out(outdir);
    const auto t0 = std::chrono::steady_clock::now();
    auto seconds = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    Run run(cfg, out);
    try {
        def.run(run);
    } catch (const NumericError& e) {
        out.write("config.ini", cfg.serialize());
        json status = {{"ok", false}, {"error", "numeric"}, {"message", e.what()}, {"data", e.data()}};
        out.write_manifest(cfg, seconds(), status);
        diagnose("numeric", e.what(), {{"data", e.data()}, {"kind", def.name}});
        return 3;
    }
    json summary = {{"kind", def.name}, {"results", run.results}, {"checks", run.checks}, {"passed", !run.failed}};
    out.write_json("results.json", summary);
    out.write("config.ini", cfg.serialize());
    out.write_manifest(cfg, seconds(), {{"ok", !run.failed}});
    if (!run.stdout_text.empty()) std::cout << run.stdout_text;
    else std::cout << summary.dump(2) << "\n";
    if (run.failed) {
        json failed = json::array();
        for (const auto& c : run.checks)
            if (!c["ok"].get<bool>()) failed.push_back(c);
        diagnose("numeric", "asserted invariant violated", {{"failed", failed}, {"kind", def.name}});
        return 3;
    }
    return 0;
}

ExperimentConfig resolve(const Bound& b, const std::string& outer_config) {
    ExperimentConfig cfg = b.def->make_config();
    for (const auto& path : {outer_config, b.config})
        if (!path.empty()) cfg.merge_text(read_file(path), path);
    for (const auto& [id, opt] : b.options)
        if (opt->count() > 0) cfg.set(id, b.values.at(id));
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schrolab: spectral control experiments for Schroedinger equations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SCHROLAB_VERSION));

    std::vector<std::unique_ptr<Bound>> bound;
    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a config file or by name");
    std::string run_config;
    run_cmd->add_option("--config", run_config, "config file naming the experiment kind")->check(CLI::ExistingFile);
    run_cmd->require_subcommand(0, 1);
    for (const auto& def : experiments()) {
        for (CLI::App* parent : {&app, run_cmd}) {
            auto b = std::make_unique<Bound>();
            b->def = &def;
            b->app = parent->add_subcommand(def.name, def.help);
            bind(*b);
            bound.push_back(std::move(b));
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        diagnose("config", e.what());
        return 2;
    }

    try {
        for (const auto& b : bound)
            if (b->app->parsed()) return execute(*b->def, resolve(*b, b->app->get_parent() == run_cmd ? run_config : ""));
        if (run_cmd->parsed()) {
            if (run_config.empty()) throw ConfigError("run needs --config or an experiment name");
            const auto& def = experiment(kind_of(read_file(run_config), run_config));
            ExperimentConfig cfg = def.make_config();
            cfg.merge_text(read_file(run_config), run_config);
            return execute(def, cfg);
        }
        throw ConfigError("no experiment selected");
    } catch (const ConfigError& e) {
        diagnose("config", e.what());
        return 2;
    } catch (const NumericError& e) {
        diagnose("numeric", e.what(), {{"data", e.data()}});
        return 3;
    } catch (const std::exception& e) {
        diagnose("numeric", e.what());
        return 3;
    }
}
