#include "ionbath/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ionbath {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

FileDigest digest_file(const std::filesystem::path& path) {
    FileDigest d;
    d.path = path.filename().string();
    d.bytes = static_cast<std::uint64_t>(std::filesystem::file_size(path));
    d.fnv1a64 = hex64(fnv1a64_file(path));
    return d;
}

std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    using Json = nlohmann::ordered_json;
    Json j;
    j["command"] = manifest.command;
    j["master_seed"] = manifest.master_seed;
    j["workers"] = manifest.workers;
    j["build_version"] = manifest.build_version;
    j["start_time"] = manifest.start_time;
    j["end_time"] = manifest.end_time;
    if (!manifest.config_json.empty())
        j["config"] = Json::parse(manifest.config_json);
    auto dump_digests = [](const std::vector<FileDigest>& files) {
        Json arr = Json::array();
        for (const FileDigest& f : files)
            arr.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a64}});
        return arr;
    };
    j["inputs"] = dump_digests(manifest.inputs);
    j["outputs"] = dump_digests(manifest.outputs);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ionbath
