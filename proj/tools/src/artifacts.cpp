#include "artifacts.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <openssl/crypto.h>

#include "schrolab/errors.hpp"
#include "schrolab/parallel.hpp"

#ifndef SCHROLAB_VERSION
#define SCHROLAB_VERSION "0.0.0"
#endif

namespace schrolab::cli {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& content) {
    std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    os << content;
    os.close();
    records_.push_back({name, sha256_hex(content), content.size()});
}

void OutputSet::write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_real(r[i]);
        out += "\n";
    }
    return out;
}

nlohmann::json library_versions() {
    return {
        {"schrolab", SCHROLAB_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"fftw", std::string(fftw_version)},
        {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))},
        {"compiler", __VERSION__},
    };
}

void OutputSet::write_manifest(const ExperimentConfig& cfg, double wall_seconds, const nlohmann::json& status) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& r : records_) files.push_back({{"name", r.name}, {"sha256", r.sha256}, {"bytes", r.bytes}});
    nlohmann::json params = nlohmann::json::object();
    for (const auto& id : cfg.keys()) params[id] = cfg.text(id);
    nlohmann::json m = {
        {"kind", cfg.kind()},
        {"seed", cfg.seed()},
        {"config", params},
        {"config_text", cfg.serialize()},
        {"versions", library_versions()},
        {"threads", thread_count()},
        {"wall_time_s", wall_seconds},
        {"status", status},
        {"files", files},
    };
    std::ofstream os(dir_ / "manifest.json", std::ios::trunc);
    os << m.dump(2) << "\n";
}

}  // namespace schrolab::cli
