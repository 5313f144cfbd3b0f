#include "ivmcd/manifest.hpp"

#include "ivmcd/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

namespace ivmcd {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 initialisation failed");
    }
    void update(const void* data, std::size_t len) {
        if (EVP_DigestUpdate(ctx_.get(), data, len) != 1) throw std::runtime_error("SHA-256 update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("SHA-256 final failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 0xF]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void RunManifest::add_input(const std::filesystem::path& path) { inputs.push_back({path.string(), sha256_file(path)}); }

void RunManifest::add_output(const std::filesystem::path& path) {
    outputs.push_back({path.string(), sha256_file(path)});
}

std::string RunManifest::config_hash() const { return sha256_hex(config.dump()); }

nlohmann::json RunManifest::to_json() const {
    const auto files = [](const std::vector<FileDigest>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& f : v) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
        return arr;
    };
    return {{"schema_version", 1},   {"kind", "run_manifest"},  {"command", command},
            {"tool_version", kToolVersion}, {"seed", seed},      {"threads", threads},
            {"config", config},      {"config_hash", config_hash()}, {"inputs", files(inputs)},
            {"outputs", files(outputs)}};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace ivmcd
