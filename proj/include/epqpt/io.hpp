#pragma once

#include "epqpt/ensembles.hpp"
#include "epqpt/epfinder.hpp"
#include "epqpt/scalingfit.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epqpt {

// Bumped whenever numerical output may change; part of every cache key.
inline constexpr const char* kVersion = "epqpt-1.0.0";

using json = nlohmann::json;

struct RunConfig {
    std::string subcommand;
    json params = json::object();  // every numeric flag, with defaults filled in
};

// Keys are sorted by nlohmann's std::map storage, so dump() is canonical.
std::string canonical(const RunConfig& c);
uint64_t fnv1a64(std::string_view s);
std::string cache_key(const RunConfig& c);

// EPQPT_CACHE_DIR, else $XDG_CACHE_HOME/epqpt, else $HOME/.cache/epqpt.
std::filesystem::path default_cache_dir();

// Temp file in the target directory, then rename.
void write_atomic(const std::filesystem::path& p, const std::string& content);

std::optional<std::vector<std::string>> cache_load(const std::filesystem::path& dir, const std::string& key);
void cache_store(const std::filesystem::path& dir, const std::string& key, const std::vector<std::string>& blobs);

json metadata(const RunConfig& c);

// `# <metadata json>` followed by the header row.
std::string csv_preamble(const json& meta, const std::string& header);
std::string fmt_double(double x);

struct Range {
    double min = 0, max = 0;
    int steps = 0;
    bool log = false;
    std::vector<double> values() const;  // steps + 1 points; steps == 0 gives {min, max}
    json to_json() const;
};
// min:max[:steps[:log]]
Range parse_range(const std::string& s);
// Comma list of integers or integer ranges a:b[:step] (inclusive).
std::vector<int> parse_int_list(const std::string& s);

json to_json(const ExceptionalPoint& ep);
json to_json(const Degeneracy& dp);
json to_json(const ScanResult& r);
json to_json(const ScalingPoint& p);
json to_json(const FirstOrderFit& f);
json to_json(const KappaFit& k);
json to_json(const MomentStatistics& m);
json to_json(const EnsembleSpec& s);
json to_json(const ScanRegion& r);

}  // namespace epqpt
