#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitvel/csv.hpp"
#include "gaitvel/stats.hpp"

namespace gaitvel {

inline constexpr std::string_view kToolVersion = "gaitvel 0.1.0";

inline std::string content_digest(std::string_view content) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    return buf;
}

inline std::string file_digest(const std::string& path) {
    return content_digest(read_text_file(path));
}

// Record of one subcommand invocation: resolved values, input digests, seed.
// Written alongside outputs so any run can be replayed from it alone.
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> values;          // resolved flag -> value
    std::vector<std::pair<std::string, std::string>> inputs; // path -> digest
    std::uint64_t seed = 0;
    bool has_seed = false;

    void value(const std::string& key, const std::string& v) { values[key] = v; }
    void input(const std::string& path) { inputs.emplace_back(path, file_digest(path)); }
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& [path, digest] : m.inputs)
        inputs.push_back({{"path", path}, {"digest", digest}});
    nlohmann::json doc{{"tool", std::string(kToolVersion)},
                       {"subcommand", m.subcommand},
                       {"values", m.values},
                       {"inputs", std::move(inputs)}};
    if (m.has_seed) doc["seed"] = m.seed;
    return doc;
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
    write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

} // namespace gaitvel
