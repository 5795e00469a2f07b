#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ionbath {

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

struct FileDigest {
    std::string path;
    std::uint64_t bytes = 0;
    std::string fnv1a64;  // 16 hex digits
};

FileDigest digest_file(const std::filesystem::path& path);

std::string iso8601_utc_now();

// Per-run provenance record. config_json holds the resolved configuration as
// dumped by config_to_json; digests cover the files the run read and wrote.
struct RunManifest {
    std::string command;
    std::string config_json;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::string build_version;
    std::string start_time;
    std::string end_time;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace ionbath
