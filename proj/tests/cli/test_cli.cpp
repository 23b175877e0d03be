#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "artifacts.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "schrolab/errors.hpp"

using namespace schrolab;
using namespace schrolab::cli;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("schrolab_cli_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config text round-trips losslessly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-300, 300);
    for (int trial = 0; trial < 200; ++trial) {
        auto cfg = experiment("control-nonlinear").make_config();
        const double s = std::ldexp(mant(rng), ex(rng) / 4);
        const double lam = mant(rng) * std::pow(10.0, ex(rng));
        cfg.set_real("model.s", s);
        cfg.set_real("model.lambda", lam);
        cfg.set("model.T", "0.1");
        cfg.set("experiment.seed", std::to_string(rng() >> 1));
        cfg.set("control.bc", "neumann");
        const std::string text = cfg.serialize();
        auto back = experiment("control-nonlinear").make_config();
        back.merge_text(text, "roundtrip");
        CHECK(back.serialize() == text);
        const double s2 = back.real("model.s"), l2 = back.real("model.lambda");
        CHECK(std::memcmp(&s2, &s, sizeof s) == 0);
        CHECK(std::memcmp(&l2, &lam, sizeof lam) == 0);
        CHECK(back.real("model.T") == 0.1);
        CHECK(back.seed() == cfg.seed());
        CHECK(back.text("control.bc") == "neumann");
    }
    const double tiny = std::numeric_limits<double>::denorm_min();
    auto cfg = experiment("simulate").make_config();
    cfg.set_real("model.s", tiny);
    auto back = experiment("simulate").make_config();
    back.merge_text(cfg.serialize(), "t");
    CHECK(back.real("model.s") == tiny);
}

TEST_CASE("strict parsing rejects unknown, duplicate and mistyped entries") {
    auto fresh = [] { return experiment("control-internal").make_config(); };
    auto rejects = [&](const std::string& text) {
        auto c = fresh();
        CHECK_THROWS_AS(c.merge_text(text, "t"), ConfigError);
    };
    rejects("[lattice]\nNN = 4\n");
    rejects("[nowhere]\nN = 4\n");
    rejects("[lattice]\nN = 4\nN = 5\n");
    rejects("[lattice]\nN = four\n");
    rejects("[model]\nT = 1e999\n");
    rejects("[model]\nb = 0.5\n");  // known key, unused by this kind
    rejects("[experiment]\nkind = simulate\n");
    rejects("N = 4\n");
    rejects("[lattice\nN = 4\n");
    auto c = fresh();
    c.merge_text("# comment\n[lattice]\n  N = 6   # trailing\n\n[model]\nT=2\n", "t");
    CHECK(c.integer("lattice.N") == 6);
    CHECK(c.real("model.T") == 2.0);
    CHECK(c.integer("lattice.n") == 1);
    CHECK(kind_of("[experiment]\nkind = stabilize\n", "t") == "stabilize");
    CHECK_THROWS_AS(kind_of("[lattice]\nN = 3\n", "t"), ConfigError);
    CHECK_THROWS_AS(experiment("no-such"), ConfigError);
}

TEST_CASE("every experiment registers known keys and serializes its defaults") {
    CHECK(experiments().size() == 12);
    for (const auto& d : experiments()) {
        auto c = d.make_config();
        auto back = d.make_config();
        back.merge_text(c.serialize(), d.name);
        CHECK(back.serialize() == c.serialize());
        for (const auto& id : c.keys()) CHECK_NOTHROW(key(id));
    }
}

TEST_CASE("content hashes and csv formatting") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(csv({"a", "b"}, {{0.1, 1.0 / 3.0}}) == "a,b\n0.10000000000000001,0.33333333333333331\n");
}

TEST_CASE("runs with the same seed are byte-identical and the manifest covers every file") {
    for (const std::string kind : {"control-neumann", "probe-xsb", "identity-multiplier"}) {
        std::string first;
        std::map<std::string, std::string> bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto dir = scratch(kind + std::to_string(rep));
            auto cfg = experiment(kind).make_config();
            cfg.set("experiment.seed", "77");
            if (kind == "identity-multiplier") cfg.set("probe.samples", "2");
            OutputSet out(dir);
            Run run(cfg, out);
            experiment(kind).run(run);
            CHECK(!run.failed);
            out.write_json("results.json", run.results);
            out.write_manifest(cfg, 0.0, {{"ok", true}});
            for (const auto& r : out.records()) {
                bytes[rep][r.name] = slurp(dir / r.name);
                CHECK(sha256_hex(bytes[rep][r.name]) == r.sha256);
            }
            const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
            CHECK(manifest["files"].size() == out.records().size());
            std::filesystem::remove_all(dir);
        }
        CHECK(bytes[0] == bytes[1]);
    }
    // a different seed changes the data
    std::string res[2];
    for (int k = 0; k < 2; ++k) {
        const auto dir = scratch("seed" + std::to_string(k));
        auto cfg = experiment("control-neumann").make_config();
        cfg.set("experiment.seed", std::to_string(k + 1));
        OutputSet out(dir);
        Run run(cfg, out);
        experiment("control-neumann").run(run);
        res[k] = slurp(dir / "trace.json");
        std::filesystem::remove_all(dir);
    }
    CHECK(res[0] != res[1]);
}
