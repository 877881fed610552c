#include "epqpt/io.hpp"

#include "epqpt/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace epqpt {

namespace fs = std::filesystem;

std::string canonical(const RunConfig& c) {
    json j = {{"subcommand", c.subcommand}, {"params", c.params}};
    return j.dump();
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string cache_key(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical(c) + "|" + kVersion)));
    return buf;
}

fs::path default_cache_dir() {
    if (const char* e = std::getenv("EPQPT_CACHE_DIR"); e && *e) return e;
    if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return fs::path(x) / "epqpt";
    if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".cache" / "epqpt";
    return fs::temp_directory_path() / "epqpt-cache";
}

void write_atomic(const fs::path& p, const std::string& content) {
    fs::path dir = p.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = p;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InputError("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw InputError("write failed: " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::optional<std::vector<std::string>> cache_load(const fs::path& dir, const std::string& key) {
    fs::path p = dir / (key + ".json");
    std::ifstream is(p, std::ios::binary);
    if (!is) return std::nullopt;
    try {
        json j = json::parse(is);
        if (j.value("version", "") != kVersion) return std::nullopt;
        return j.at("blobs").get<std::vector<std::string>>();
    } catch (const json::exception&) {
        return std::nullopt;  // a corrupt entry is a miss
    }
}

void cache_store(const fs::path& dir, const std::string& key, const std::vector<std::string>& blobs) {
    json j = {{"version", kVersion}, {"blobs", blobs}};
    write_atomic(dir / (key + ".json"), j.dump());
}

json metadata(const RunConfig& c) {
    return {{"tool", "epqpt"},
            {"version", kVersion},
            {"subcommand", c.subcommand},
            {"params", c.params},
            {"generator", kGeneratorName},
            {"cache_key", cache_key(c)}};
}

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_preamble(const json& meta, const std::string& header) { return "# " + meta.dump() + "\n" + header + "\n"; }

std::vector<double> Range::values() const {
    if (steps <= 0) return {min, max};
    std::vector<double> v(steps + 1);
    for (int k = 0; k <= steps; ++k) {
        double t = static_cast<double>(k) / steps;
        v[k] = log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min);
    }
    v.front() = min;
    v.back() = max;
    return v;
}

json Range::to_json() const { return {{"min", min}, {"max", max}, {"steps", steps}, {"log", log}}; }

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw InputError("malformed number '" + s + "' in " + what);
    return v;
}

int to_int(const std::string& s, const std::string& what) {
    int v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InputError("malformed integer '" + s + "' in " + what);
    return v;
}

}  // namespace

Range parse_range(const std::string& s) {
    auto parts = split(s, ':');
    if (parts.size() < 2 || parts.size() > 4) throw InputError("range '" + s + "' must be min:max[:steps[:log]]");
    Range r;
    r.min = to_double(parts[0], s);
    r.max = to_double(parts[1], s);
    if (parts.size() >= 3) r.steps = to_int(parts[2], s);
    if (parts.size() == 4) {
        if (parts[3] != "log") throw InputError("range '" + s + "': 4th field must be 'log'");
        r.log = true;
    }
    if (!(r.max > r.min)) throw InputError("range '" + s + "': max must exceed min");
    if (r.steps < 0) throw InputError("range '" + s + "': steps must be >= 0");
    if (r.log && !(r.min > 0)) throw InputError("range '" + s + "': log spacing needs min > 0");
    return r;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : split(s, ',')) {
        auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(to_int(parts[0], s));
            continue;
        }
        if (parts.size() > 3) throw InputError("integer list item '" + item + "' must be a or a:b[:step]");
        int a = to_int(parts[0], s), b = to_int(parts[1], s);
        int st = parts.size() == 3 ? to_int(parts[2], s) : 1;
        if (st <= 0 || b < a) throw InputError("integer list item '" + item + "' is empty");
        for (int v = a; v <= b; v += st) out.push_back(v);
    }
    if (out.empty()) throw InputError("empty integer list");
    return out;
}

json to_json(const ExceptionalPoint& ep) {
    json j = {{"re", ep.lambda.real()},
              {"im", ep.lambda.imag()},
              {"residual", ep.residual},
              {"cell_size", ep.cell_size},
              {"method", ep.method},
              {"energy", {ep.energy.real(), ep.energy.imag()}},
              {"multiplicity", ep.multiplicity}};
    j["levels"] = ep.levels ? json::array({ep.levels->first, ep.levels->second}) : json(nullptr);
    return j;
}

json to_json(const Degeneracy& dp) {
    return {{"re", dp.lambda.real()},
            {"im", dp.lambda.imag()},
            {"winding", dp.winding},
            {"cell_size", dp.cell_size},
            {"identity_monodromy", dp.identity_monodromy}};
}

json to_json(const ScanResult& r) {
    json eps = json::array(), dps = json::array(), un = json::array();
    for (const auto& e : r.eps) eps.push_back(to_json(e));
    for (const auto& d : r.diabolic) dps.push_back(to_json(d));
    for (const auto& d : r.unresolved) un.push_back(to_json(d));
    return {{"eps", eps},
            {"diabolic", dps},
            {"unresolved", un},
            {"total_winding", r.total_winding},
            {"cells", r.cells},
            {"eigensolves", r.eigensolves}};
}

json to_json(const ScalingPoint& p) {
    return {{"N", p.N}, {"re", p.re}, {"im", p.im}, {"extended", p.extended}};
}

json to_json(const FirstOrderFit& f) {
    return {{"eta", f.eta}, {"zeta", f.zeta}, {"intercept", f.intercept}, {"R2", f.R2},
            {"used_N", f.used_N}, {"dropped_N", f.dropped_N}};
}

json to_json(const KappaFit& k) {
    json iv = json::array();
    for (size_t i = 0; i < k.intervals.size(); ++i)
        iv.push_back({{"N0", k.intervals[i].first}, {"N1", k.intervals[i].second}, {"kappa", k.kappa[i]}});
    return {{"intervals", iv}, {"tail", k.tail}, {"tail_R2", k.tail_R2},
            {"increasing", k.increasing}, {"decreasing", k.decreasing}};
}

namespace {

json entry(const MomentEntry& e) {
    return {{"mean", e.stat.mean}, {"sem", e.stat.sem}, {"var", e.stat.var}, {"var_sem", e.var_sem},
            {"predicted_mean", e.predicted_mean}, {"predicted_var", e.predicted_var}};
}

}  // namespace

json to_json(const MomentStatistics& m) {
    return {{"kind", to_string(m.kind)}, {"d", m.d}, {"samples", m.samples}, {"D_E0", m.D_E0}, {"kappa", m.kappa},
            {"M_V", entry(m.M_V)}, {"D_V", entry(m.D_V)}, {"K", entry(m.K)}};
}

json to_json(const EnsembleSpec& s) {
    return {{"kind", to_string(s.kind)}, {"d", s.d}, {"sigma", s.sigma}, {"seed", s.seed}, {"samples", s.samples}};
}

json to_json(const ScanRegion& r) {
    return {{"re_min", r.re_min}, {"re_max", r.re_max}, {"im_min", r.im_min}, {"im_max", r.im_max},
            {"max_depth", r.max_depth}, {"log_im", r.log_im}};
}

}  // namespace epqpt
