#pragma once

#include "epqpt/io.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace epqpt {

struct CommandContext {
    int threads = 0;              // 0: available parallelism
    std::ostream* log = nullptr;  // progress messages
};

// One output file; suffix "" is the primary output, others are appended to
// the stem of the primary path.
struct Artifact {
    std::string suffix;
    std::string content;
};
using Artifacts = std::vector<Artifact>;

Artifacts cmd_spectrum(const RunConfig& cfg, const CommandContext& ctx);
Artifacts cmd_ep_scan(const RunConfig& cfg, const CommandContext& ctx);
Artifacts cmd_scaling(const RunConfig& cfg, const CommandContext& ctx);
Artifacts cmd_ensemble(const RunConfig& cfg, const CommandContext& ctx);
Artifacts cmd_crossings(const RunConfig& cfg, const CommandContext& ctx);

struct CheckReport {
    bool pass = true;
    std::vector<std::string> lines;  // one "PASS|FAIL name: detail" per check
    json summary;
};
CheckReport cmd_check(const RunConfig& cfg, const CommandContext& ctx);

// Scan EPs against discriminant roots: every scan EP within tol of a
// distinct oracle root and vice versa.
struct OracleComparison {
    int scan_count = 0;
    int oracle_count = 0;
    int matched = 0;
    double max_distance = 0;
    int diabolic = 0;
    int total_winding = 0;
    bool equivalent = false;
};
OracleComparison compare_with_oracle(const HamiltonianFamily& f, double tol, int max_depth = 40);

// Artifacts from the cache when present, otherwise computed and stored.
Artifacts run_cached(const RunConfig& cfg, bool use_cache, const std::function<Artifacts()>& compute);

// Writes artifacts: primary to `out`, others to stem(out) + suffix. An
// empty `out` sends the primary artifact to `os` and drops the rest.
void emit(const Artifacts& a, const std::string& out, std::ostream& os);

}  // namespace epqpt
