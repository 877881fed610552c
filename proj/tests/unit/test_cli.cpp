#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int rc = -1;
    std::string out;
};

const std::string& cli() {
    static const std::string path = [] {
        const char* p = std::getenv("EPQPT_CLI");
        REQUIRE_MESSAGE(p != nullptr, "EPQPT_CLI must point at the epqpt executable");
        return std::string(p);
    }();
    return path;
}

// Fresh cache directory shared by all cases; children inherit it.
const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("epqpt_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d / "cache");
        ::setenv("EPQPT_CACHE_DIR", (d / "cache").c_str(), 1);
        return d;
    }();
    return dir;
}

Run run(const std::string& args) {
    scratch();
    Run r;
    const std::string cmd = "'" + cli() + "' --quiet " + args + " 2>/dev/null";
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

size_t cache_entries() {
    size_t n = 0;
    for (const auto& e : fs::directory_iterator(scratch() / "cache"))
        if (e.path().extension() == ".json") ++n;
    return n;
}

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
    CHECK(run("").rc == 1);
    CHECK(run("--help").rc == 0);
    CHECK(run("frobnicate").rc == 1);
    CHECK(run("spectrum --model nope").rc == 1);
    CHECK(run("spectrum --lambda 1:2:x").rc == 1);
    CHECK(run("ep-scan --im 0:1").rc == 1);
    CHECK(run("ensemble --kind diag-rect").rc == 1);
    CHECK(run("scaling --model qpt1 --N-list 5:x").rc == 1);
}

TEST_CASE("numerical failure exits 2, failed check exits 3, passing oracle check exits 0") {
    // Depth 2 leaves every sample with unresolved cells.
    CHECK(run("--no-cache ensemble --d 8 --samples 4 --max-depth 2").rc == 2);
    CHECK(run("check --suite moments --d 8 --samples 10").rc == 3);
    auto ok = run("check --suite oracle");
    CHECK(ok.rc == 0);
    CHECK(ok.out.find("PASS oracle-qpt1p") != std::string::npos);
    CHECK(ok.out.find("FAIL") == std::string::npos);
}

TEST_CASE("CSV outputs start with a metadata line") {
    auto r = run("spectrum --model qpt1 --N 6 --lambda -1:1:10");
    REQUIRE(r.rc == 0);
    std::istringstream is(r.out);
    std::string meta, header, line;
    std::getline(is, meta);
    std::getline(is, header);
    REQUIRE(meta.rfind("# ", 0) == 0);
    auto j = nlohmann::json::parse(meta.substr(2));
    CHECK(j.at("subcommand") == "spectrum");
    CHECK(j.at("params").at("N") == 6);
    CHECK(j.at("generator").is_string());
    CHECK(j.at("version").is_string());
    CHECK(header.rfind("lambda,E1,", 0) == 0);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 11);
}

TEST_CASE("ep-scan JSON lists the EPs of a region") {
    auto r = run("ep-scan --model qpt2 --N 4 --re 0:2 --im 1e-4:2");
    REQUIRE(r.rc == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j.contains("metadata"));
    CHECK(j.dump().find("\"eps\"") != std::string::npos);
}

TEST_CASE("identical configurations give byte-identical files at any thread count") {
    const auto a = scratch() / "h1.csv", b = scratch() / "h3.csv";
    const std::string args = "ensemble --d 6 --samples 8 --seed 5 --kind offd --bins 20";
    REQUIRE(run("--no-cache --threads 1 -o " + a.string() + " " + args).rc == 0);
    REQUIRE(run("--no-cache --threads 3 -o " + b.string() + " " + args).rc == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(slurp(a).empty());
    for (const auto& suffix : {std::string(".plane.csv"), std::string(".stats.json")}) {
        const fs::path sa = scratch() / ("h1" + suffix), sb = scratch() / ("h3" + suffix);
        REQUIRE(fs::exists(sa));
        CHECK(slurp(sa) == slurp(sb));
    }

    const std::string cr = "crossings --h0 c2 --dist normal --d 8 --samples 2000 --x 0:4:40 --bins 10";
    auto c1 = run("--no-cache --threads 1 " + cr), c4 = run("--no-cache --threads 4 " + cr);
    REQUIRE(c1.rc == 0);
    CHECK(c1.out == c4.out);
    auto other = run("--no-cache --threads 1 " + cr + " --seed 2");
    CHECK(other.out != c1.out);
}

TEST_CASE("result cache: hits return the stored result, --no-cache and new flags recompute") {
    const std::string args = "spectrum --model qpt2 --N 5 --lambda 0:2:20";
    const size_t before = cache_entries();
    auto first = run(args);
    REQUIRE(first.rc == 0);
    CHECK(cache_entries() == before + 1);
    CHECK(run(args).out == first.out);

    // Overwrite the stored entry: a cache hit must return it verbatim.
    fs::path entry;
    for (const auto& e : fs::directory_iterator(scratch() / "cache")) {
        auto j = nlohmann::json::parse(slurp(e.path()));
        if (j.at("blobs").size() == 2 && j.at("blobs")[1] == first.out) entry = e.path();
    }
    REQUIRE_FALSE(entry.empty());
    auto j = nlohmann::json::parse(slurp(entry));
    j["blobs"][1] = "tampered\n";
    std::ofstream(entry, std::ios::binary) << j.dump();
    CHECK(run(args).out == "tampered\n");
    CHECK(run("--no-cache " + args).out == first.out);

    auto changed = run("spectrum --model qpt2 --N 5 --lambda 0:2:21");
    CHECK(changed.rc == 0);
    CHECK(changed.out != first.out);
    CHECK(cache_entries() == before + 2);
    fs::remove_all(scratch());
}
