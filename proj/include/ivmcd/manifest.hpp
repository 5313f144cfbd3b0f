#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ivmcd {

inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
    std::string path;
    std::string sha256;
};

/// Everything needed to rerun a command; carries no timestamps, so equal
/// manifests mean equal outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    /// SHA-256 of the canonical config dump.
    std::string config_hash() const;
    nlohmann::json to_json() const;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ivmcd
