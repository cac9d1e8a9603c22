#pragma once

#include <map>
#include <string>
#include <vector>

namespace latent {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to every stage's outputs. Replaying the
/// stored config reproduces the output files byte for byte (the manifest
/// itself carries the wall-clock timestamp and is excluded from comparisons).
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string subcommand;
    std::map<std::string, std::string> config;         // resolved flat key -> value
    std::map<std::string, std::string> input_digests;  // input path -> fnv1a64 hex
    std::vector<std::string> outputs;                  // file names relative to the out dir
    std::string created_utc;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

std::string utc_timestamp_now();

}  // namespace latent
