#include "latent/manifest.hpp"

#include <cstdio>
#include <ctime>

#include <nlohmann/json.hpp>

#include "latent/core.hpp"

namespace latent {

using nlohmann::json;

std::string utc_timestamp_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    json j;
    j["tool_version"] = manifest.tool_version;
    j["subcommand"] = manifest.subcommand;
    j["config"] = manifest.config;
    j["input_digests"] = manifest.input_digests;
    j["outputs"] = manifest.outputs;
    j["created_utc"] = manifest.created_utc;
    write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("invalid manifest: " + path);
    }
    RunManifest m;
    m.tool_version = j.value("tool_version", "");
    m.subcommand = j.value("subcommand", "");
    if (j.contains("config")) {
        for (auto& [k, v] : j["config"].items()) m.config[k] = v.get<std::string>();
    }
    if (j.contains("input_digests")) {
        for (auto& [k, v] : j["input_digests"].items()) m.input_digests[k] = v.get<std::string>();
    }
    if (j.contains("outputs")) {
        for (auto& v : j["outputs"]) m.outputs.push_back(v.get<std::string>());
    }
    m.created_utc = j.value("created_utc", "");
    return m;
}

}  // namespace latent
