#include "epqpt/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace epqpt;

namespace {

// Exit codes.
constexpr int kOk = 0, kUsage = 1, kNumerical = 2, kCheckFailed = 3;

struct ModelFlags {
    std::string model = "qpt1";
    int N = 10;
    double a = 3.0, c = 4.0, omega = 1.0;

    void add(CLI::App* s) {
        s->add_option("--model", model, "qpt1 | qpt2 | qpt1p | ho")->capture_default_str();
        s->add_option("--N", N, "number of two-level systems (d = N + 1)")->capture_default_str();
        s->add_option("--a", a, "qpt1 coupling a > 1/2")->capture_default_str();
        s->add_option("--c", c, "qpt1p shift c != 0")->capture_default_str();
        s->add_option("--omega", omega, "ho level spacing")->capture_default_str();
    }
    void into(json& p) const {
        p["model"] = model;
        p["N"] = N;
        p["a"] = a;
        p["c"] = c;
        p["omega"] = omega;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exceptional points of Lipkin-type Hamiltonians H(lambda) = H0 + lambda V"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    bool no_cache = false, quiet = false;
    std::string out;
    app.add_option("--threads", threads, "worker threads (0: available parallelism)")->capture_default_str();
    app.add_flag("--no-cache", no_cache, "recompute even when a cached result exists");
    app.add_flag("--quiet", quiet, "no progress messages on stderr");
    app.add_option("-o,--out", out, "primary output path (default: stdout)");

    RunConfig cfg;
    std::function<Artifacts(const CommandContext&)> run;
    bool is_check = false;

    ModelFlags spec_m;
    std::string lambda = "-2:2:400";
    auto* sp = app.add_subcommand("spectrum", "real-axis level sweep as CSV");
    spec_m.add(sp);
    sp->add_option("--lambda", lambda, "min:max:steps[:log]")->capture_default_str();
    sp->callback([&] {
        cfg.subcommand = "spectrum";
        spec_m.into(cfg.params);
        cfg.params["lambda"] = parse_range(lambda).to_json();
        run = [&](const CommandContext& c) { return cmd_spectrum(cfg, c); };
    });

    ModelFlags scan_m;
    std::string re = "-2:2", im = "1e-4:2";
    double tol = 1e-10;
    int max_depth = 40;
    bool assign = false, no_probe = false;
    auto* es = app.add_subcommand("ep-scan", "EP list in a rectangle of the upper half plane as JSON");
    scan_m.add(es);
    es->add_option("--re", re, "min:max")->capture_default_str();
    es->add_option("--im", im, "min:max[:0:log] (min > 0)")->capture_default_str();
    es->add_option("--tol", tol, "localization tolerance")->capture_default_str();
    es->add_option("--max-depth", max_depth, "quadtree depth limit")->capture_default_str();
    es->add_flag("--assign", assign, "assign real-axis level pairs");
    es->add_flag("--no-probe", no_probe, "skip the interior probe of zero-winding cells");
    es->callback([&] {
        cfg.subcommand = "ep-scan";
        scan_m.into(cfg.params);
        cfg.params["re"] = parse_range(re).to_json();
        cfg.params["im"] = parse_range(im).to_json();
        cfg.params["tol"] = tol;
        cfg.params["max_depth"] = max_depth;
        cfg.params["assign"] = assign;
        cfg.params["probe"] = !no_probe;
        run = [&](const CommandContext& c) { return cmd_ep_scan(cfg, c); };
    });

    ModelFlags sc_m;
    std::string n_list = "5:25";
    double extended_below = 1e-12;
    unsigned digits = 50;
    bool edif = false;
    auto* sc = app.add_subcommand("scaling", "nearest-EP finite-size scaling as JSON");
    sc_m.add(sc);
    sc->add_option("--N-list", n_list, "comma list or a:b[:step]")->capture_default_str();
    sc->add_option("--extended-below", extended_below, "Im threshold for extended precision")->capture_default_str();
    sc->add_option("--digits", digits, "extended precision digits")->capture_default_str();
    sc->add_flag("--edif", edif, "also compare with the real-axis gap");
    sc->callback([&] {
        cfg.subcommand = "scaling";
        sc_m.into(cfg.params);
        cfg.params["N"] = 0;
        cfg.params["N_list"] = parse_int_list(n_list);
        cfg.params["extended_below"] = extended_below;
        cfg.params["digits"] = digits;
        cfg.params["edif"] = edif;
        run = [&](const CommandContext& c) { return cmd_scaling(cfg, c); };
    });

    std::string kind = "full", h0 = "ho", mode = "histogram", d_list = "8,16,32,64";
    std::string ens_re = "-3:3", ens_im = "1e-4:3:0:log";
    int ens_d = 16, ens_depth = 40, ens_bins = 60;
    long samples = 100;
    uint64_t seed = 1;
    double ens_omega = 1.0;
    auto* en = app.add_subcommand("ensemble", "ensemble EP histograms or nearest-EP statistics");
    en->add_option("--kind", kind, "full | offd")->capture_default_str();
    en->add_option("--h0", h0, "c1 | c2 | ho")->capture_default_str();
    en->add_option("--mode", mode, "histogram | nearest")->capture_default_str();
    en->add_option("--d", ens_d, "dimension (histogram mode)")->capture_default_str();
    en->add_option("--d-list", d_list, "dimensions (nearest mode)")->capture_default_str();
    en->add_option("--samples", samples, "random realizations")->capture_default_str();
    en->add_option("--seed", seed, "64-bit seed")->capture_default_str();
    en->add_option("--re", ens_re, "scan region Re range")->capture_default_str();
    en->add_option("--im", ens_im, "scan region Im range")->capture_default_str();
    en->add_option("--max-depth", ens_depth, "quadtree depth limit")->capture_default_str();
    en->add_option("--bins", ens_bins, "radial bins")->capture_default_str();
    en->add_option("--omega", ens_omega, "ho level spacing")->capture_default_str();
    en->callback([&] {
        cfg.subcommand = "ensemble";
        auto& p = cfg.params;
        parse_ensemble_kind(kind);
        parse_reference_h0(h0);
        p["kind"] = kind;
        p["h0"] = h0;
        p["mode"] = mode;
        p["seed"] = seed;
        p["samples"] = samples;
        p["omega"] = ens_omega;
        if (mode == "histogram") {
            p["d"] = ens_d;
            p["re"] = parse_range(ens_re).to_json();
            p["im"] = parse_range(ens_im).to_json();
            p["max_depth"] = ens_depth;
            p["bins"] = ens_bins;
        } else if (mode == "nearest") {
            p["d_list"] = parse_int_list(d_list);
        } else {
            throw InputError("--mode must be histogram or nearest");
        }
        run = [&](const CommandContext& c) { return cmd_ensemble(cfg, c); };
    });

    std::string cr_h0 = "ho", dist = "rect", xr = "0:5:500";
    int cr_d = 16, cr_bins = 100;
    long cr_samples = 0;
    uint64_t cr_seed = 1;
    double cr_omega = 1.0;
    auto* cr = app.add_subcommand("crossings", "analytic and empirical diagonal crossing densities as CSV");
    cr->add_option("--h0", cr_h0, "c1 | c2 | ho")->capture_default_str();
    cr->add_option("--dist", dist, "rect | normal")->capture_default_str();
    cr->add_option("--d", cr_d, "dimension")->capture_default_str();
    cr->add_option("--x", xr, "|lambda| grid min:max:steps[:log]")->capture_default_str();
    cr->add_option("--samples", cr_samples, "Monte Carlo samples (0: analytic only)")->capture_default_str();
    cr->add_option("--bins", cr_bins, "empirical histogram bins over the --x range")->capture_default_str();
    cr->add_option("--seed", cr_seed, "64-bit seed")->capture_default_str();
    cr->add_option("--omega", cr_omega, "ho level spacing")->capture_default_str();
    cr->callback([&] {
        cfg.subcommand = "crossings";
        auto& p = cfg.params;
        parse_reference_h0(cr_h0);
        p["h0"] = cr_h0;
        p["dist"] = dist;
        p["d"] = cr_d;
        p["x"] = parse_range(xr).to_json();
        p["samples"] = cr_samples;
        p["bins"] = cr_bins;
        p["seed"] = cr_seed;
        p["omega"] = cr_omega;
        run = [&](const CommandContext& c) { return cmd_crossings(cfg, c); };
    });

    std::string suite = "all";
    int ck_N = 4, ck_d = 64;
    long ck_samples = 10000;
    auto* ck = app.add_subcommand("check", "oracle-equivalence and moment suites (exit 3 on failure)");
    ck->add_option("--suite", suite, "oracle | moments | all")->capture_default_str();
    ck->add_option("--N", ck_N, "oracle suite size")->capture_default_str();
    ck->add_option("--d", ck_d, "moment suite dimension")->capture_default_str();
    ck->add_option("--samples", ck_samples, "moment suite samples")->capture_default_str();
    ck->callback([&] {
        cfg.subcommand = "check";
        cfg.params = {{"suite", suite}, {"N", ck_N}, {"d", ck_d}, {"samples", ck_samples}, {"seed", 1}};
        is_check = true;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    CommandContext ctx;
    ctx.threads = threads;
    ctx.log = quiet ? nullptr : &std::cerr;
    try {
        if (is_check) {
            auto rep = cmd_check(cfg, ctx);
            for (const auto& l : rep.lines) std::cout << l << "\n";
            if (!out.empty()) write_atomic(out, rep.summary.dump(2) + "\n");
            return rep.pass ? kOk : kCheckFailed;
        }
        auto artifacts = run_cached(cfg, !no_cache, [&] { return run(ctx); });
        emit(artifacts, out, std::cout);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
