#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace schrolab::cli {

std::string sha256_hex(const std::string& bytes);

struct ArtifactRecord {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

// Files of one run, written in order into a single directory.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    void write(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::json& j);
    const std::vector<ArtifactRecord>& records() const { return records_; }

    // manifest.json: config, library versions, wall time and the hash of every file above.
    void write_manifest(const ExperimentConfig& cfg, double wall_seconds, const nlohmann::json& status);

private:
    std::filesystem::path dir_;
    std::vector<ArtifactRecord> records_;
};

// Rows of numbers as CSV, %.17g.
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

nlohmann::json library_versions();

}  // namespace schrolab::cli
