#pragma once

// Run manifest: command, seed, resolved configuration digest and content hashes of inputs and
// outputs. Paths are stored by basename (inputs) or relative to the output directory (outputs),
// and no clock is read, so reruns with the same inputs produce identical manifests.

#include "windprob/error.hpp"
#include "windprob/text.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace windprob::pipeline {

inline std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1 &&
                EVP_DigestUpdate(ctx.get(), data.data(), data.size()) == 1 &&
                EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) == 1,
            ErrorCode::Io, "SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

struct FileDigest {
    std::string path;
    std::string sha256;
};

struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_sha256;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;

    void add_input(const std::string& path) {
        inputs.push_back({std::filesystem::path(path).filename().string(), sha256_hex(text::read_file(path))});
    }

    /// Adds every file in `names`, each relative to `dir`.
    void add_outputs(const std::string& dir, const std::vector<std::string>& names) {
        for (const auto& n : names) {
            outputs.push_back({n, sha256_hex(text::read_file((std::filesystem::path(dir) / n).string()))});
        }
    }
};

inline nlohmann::json to_json(const Manifest& m) {
    auto files = [](const std::vector<FileDigest>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& f : v) {
            a.push_back({{"path", f.path}, {"sha256", f.sha256}});
        }
        return a;
    };
    return {{"format", "windprob.manifest"},
            {"command", m.command},
            {"seed", m.seed},
            {"config_sha256", m.config_sha256},
            {"inputs", files(m.inputs)},
            {"outputs", files(m.outputs)}};
}

/// Writes manifest.json into `dir`.
inline void write_manifest(const Manifest& m, const std::string& dir) {
    text::write_file((std::filesystem::path(dir) / "manifest.json").string(), to_json(m).dump(2) + "\n");
}

} // namespace windprob::pipeline
