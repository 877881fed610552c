#include "epqpt/commands.hpp"

#include "epqpt/ensembles.hpp"
#include "epqpt/scalingfit.hpp"
#include "epqpt/spinmodels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

namespace epqpt {

namespace {

Range range_from(const json& j) {
    Range r;
    r.min = j.at("min").get<double>();
    r.max = j.at("max").get<double>();
    r.steps = j.value("steps", 0);
    r.log = j.value("log", false);
    return r;
}

ModelParams model_params(const json& p) {
    ModelParams mp;
    mp.N = p.at("N").get<int>();
    mp.a = p.value("a", 3.0);
    mp.c = p.value("c", 4.0);
    mp.omega = p.value("omega", 1.0);
    return mp;
}

void say(const CommandContext& ctx, const std::string& s) {
    if (ctx.log) *ctx.log << s << std::endl;
}

double bin_center(const std::vector<double>& e, size_t k) { return 0.5 * (e[k] + e[k + 1]); }

}  // namespace

Artifacts cmd_spectrum(const RunConfig& cfg, const CommandContext&) {
    const auto& p = cfg.params;
    auto f = make_family(parse_model(p.at("model")), model_params(p));
    Range r = range_from(p.at("lambda"));
    if (r.steps <= 0) throw InputError("spectrum: --lambda needs a step count (min:max:steps)");
    SweepTable t;
    t.lambda = r.values();
    t.energies.resize(static_cast<long>(t.lambda.size()), f.dim());
    for (size_t i = 0; i < t.lambda.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<RMat> es(f.H0 + t.lambda[i] * f.V, Eigen::EigenvaluesOnly);
        t.energies.row(static_cast<long>(i)) = es.eigenvalues().transpose();
    }
    std::ostringstream os;
    os << "# " << metadata(cfg).dump() << "\n";
    write_sweep_csv(t, os);
    return {{"", os.str()}};
}

Artifacts cmd_ep_scan(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& p = cfg.params;
    auto f = make_family(parse_model(p.at("model")), model_params(p));
    Range re = range_from(p.at("re")), im = range_from(p.at("im"));
    ScanRegion reg{re.min, re.max, im.min, im.max, p.at("max_depth").get<int>(), 0.0, im.log};
    ScanOptions opt;
    opt.tol = p.at("tol").get<double>();
    opt.assign_levels = p.value("assign", false);
    opt.interior_probe = p.value("probe", true);
    say(ctx, "ep-scan: d = " + std::to_string(f.dim()));
    auto res = scan_region(f, reg, opt);
    json out = {{"metadata", metadata(cfg)}, {"region", to_json(reg)}, {"result", to_json(res)}};
    return {{"", out.dump(2) + "\n"}};
}

Artifacts cmd_scaling(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& p = cfg.params;
    Model m = parse_model(p.at("model"));
    ModelParams base = model_params(p);
    auto Ns = p.at("N_list").get<std::vector<int>>();
    NearestScalingOptions opt;
    opt.extended_below = p.value("extended_below", 1e-12);
    opt.digits = p.value("digits", 50u);
    say(ctx, "scaling: " + std::to_string(Ns.size()) + " sizes");
    auto pts = nearest_ep_points(m, base, Ns, opt, ctx.threads);
    json jp = json::array();
    for (const auto& q : pts) jp.push_back(to_json(q));
    json out = {{"metadata", metadata(cfg)}, {"points", jp}};
    if (m == Model::qpt1 || m == Model::qpt1p) {
        if (pts.size() >= 5) out["first_order"] = to_json(fit_first_order(pts));
        if (p.value("edif", false) && pts.size() >= 5) {
            auto e = edif_consistency(m, base, pts);
            json g = json::array();
            for (const auto& q : e.gaps)
                g.push_back({{"N", q.N}, {"lambda", q.lambda}, {"gap", q.gap}, {"ratio", q.ratio},
                             {"extended", q.extended}, {"dropped", q.dropped}});
            out["edif"] = {{"gaps", g}, {"gap_fit", to_json(e.gap_fit)}, {"eta_rel_diff", e.eta_rel_diff}};
        }
    } else if (pts.size() >= 3) {
        out["kappa"] = to_json(fit_kappa(pts));
        if (p.value("edif", false)) {
            ModelParams p1 = base;
            p1.N = Ns.front();
            auto f = make_family(m, p1);
            const double lc = f.critical_lambda ? *f.critical_lambda : 0.0;
            std::vector<double> gaps;
            auto pl = gap_exponent_at(m, base, Ns, lc, &gaps);
            out["edif"] = {{"lambda", lc}, {"gaps", gaps}, {"gap_exponent", pl.exponent}, {"R2", pl.R2}};
        }
    }
    return {{"", out.dump(2) + "\n"}};
}

Artifacts cmd_ensemble(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& p = cfg.params;
    EnsembleKind kind = parse_ensemble_kind(p.at("kind"));
    ReferenceH0 h0k = parse_reference_h0(p.at("h0"));
    const uint64_t seed = p.at("seed").get<uint64_t>();
    const long samples = p.at("samples").get<long>();
    const std::string mode = p.at("mode");
    json meta = metadata(cfg);
    if (mode == "histogram") {
        const int d = p.at("d").get<int>();
        auto h0 = reference_spectrum(h0k, d, p.value("omega", 1.0));
        auto spec = make_spec(kind, h0.energies, seed, samples);
        Range re = range_from(p.at("re")), im = range_from(p.at("im"));
        EpHistogramOptions opt;
        opt.region = {re.min, re.max, im.min, im.max, p.at("max_depth").get<int>(), 0.0, im.log};
        opt.threads = ctx.threads;
        opt.radial_bins = p.value("bins", 60);
        say(ctx, "ensemble: " + std::to_string(samples) + " EP scans at d = " + std::to_string(d));
        auto r = ep_histogram(spec, h0, opt);
        meta["region"] = to_json(r.region);
        meta["spec"] = to_json(spec);
        std::string radial = csv_preamble(meta, "x,density");
        for (size_t k = 0; k + 1 < r.radial.edges.size(); ++k)
            radial += fmt_double(bin_center(r.radial.edges, k)) + "," + fmt_double(r.radial.density[k]) + "\n";
        std::string plane = csv_preamble(meta, "re,im,count");
        const size_t nre = r.plane.re_edges.size() - 1;
        for (size_t y = 0; y + 1 < r.plane.im_edges.size(); ++y)
            for (size_t x = 0; x < nre; ++x)
                plane += fmt_double(bin_center(r.plane.re_edges, x)) + "," + fmt_double(bin_center(r.plane.im_edges, y)) +
                         "," + std::to_string(r.plane.counts[y * nre + x]) + "\n";
        double cos_sum = 0;
        for (const auto& s : r.per_sample)
            for (const auto& z : s) cos_sum += std::abs(z.real()) / std::abs(z);
        json stats = {{"metadata", meta},
                      {"total_eps", r.total_eps},
                      {"captured_mass", r.captured_mass},
                      {"failed_samples", r.failed},
                      {"mean_abs_cos", r.total_eps ? cos_sum / static_cast<double>(r.total_eps) : 0.0}};
        return {{"", radial}, {".plane.csv", plane}, {".stats.json", stats.dump(2) + "\n"}};
    }
    if (mode == "nearest") {
        auto ds = p.at("d_list").get<std::vector<int>>();
        NearestSearchOptions opt;
        say(ctx, "ensemble: nearest EP statistics over " + std::to_string(ds.size()) + " dimensions");
        auto st = nearest_ep_stats(kind, h0k, ds, samples, seed, opt, ctx.threads);
        std::string csv = csv_preamble(meta, "d,mean_abs_lambda1,sem,lambda_thr");
        json rows = json::array();
        for (const auto& r : st.rows) {
            csv += std::to_string(r.d) + "," + fmt_double(r.abs_lambda.mean) + "," + fmt_double(r.abs_lambda.sem) + "," +
                   fmt_double(r.lambda_thr) + "\n";
            rows.push_back({{"d", r.d}, {"mean", r.abs_lambda.mean}, {"sem", r.abs_lambda.sem},
                            {"lambda_thr", r.lambda_thr}, {"failed", r.failed}});
        }
        json stats = {{"metadata", meta}, {"rows", rows},
                      {"mean_exponent", st.mean_exponent}, {"mean_R2", st.mean_R2},
                      {"thr_exponent", st.thr_exponent}, {"thr_R2", st.thr_R2}};
        return {{"", csv}, {".stats.json", stats.dump(2) + "\n"}};
    }
    throw InputError("ensemble: --mode must be histogram or nearest");
}

Artifacts cmd_crossings(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& p = cfg.params;
    const int d = p.at("d").get<int>();
    ReferenceH0 h0k = parse_reference_h0(p.at("h0"));
    const std::string dist = p.at("dist");
    EnsembleKind kind = dist == "rect" ? EnsembleKind::diag_rect
                        : dist == "normal" ? EnsembleKind::diag_norm
                                           : throw InputError("crossings: --dist must be rect or normal");
    auto h0 = reference_spectrum(h0k, d, p.value("omega", 1.0));
    auto spec = make_spec(kind, h0.energies, p.at("seed").get<uint64_t>(), p.at("samples").get<long>());
    Range x = range_from(p.at("x"));
    if (x.steps <= 0) throw InputError("crossings: --x needs a step count");
    json meta = metadata(cfg);
    meta["spec"] = to_json(spec);
    meta["extended_spacings"] = h0.extended;
    auto curve = crossing_density_analytic(h0, slope_distribution(kind), spec.sigma, x.values());
    std::string a = csv_preamble(meta, "x,density");
    for (size_t k = 0; k < curve.x.size(); ++k) a += fmt_double(curve.x[k]) + "," + fmt_double(curve.density[k]) + "\n";
    Artifacts out{{"", a}};
    if (spec.samples > 0) {
        say(ctx, "crossings: " + std::to_string(spec.samples) + " diagonal samples");
        Range xb = x;
        xb.steps = p.value("bins", 100);
        auto edges = xb.values();
        auto h = crossing_samples_diagonal(h0, spec, edges, false, ctx.threads);
        std::string e = csv_preamble(meta, "x,density");
        for (size_t k = 0; k + 1 < edges.size(); ++k)
            e += fmt_double(bin_center(edges, k)) + "," +
                 fmt_double(static_cast<double>(h.counts[k]) / (static_cast<double>(h.total) * (edges[k + 1] - edges[k]))) +
                 "\n";
        out.push_back({"_empirical.csv", e});
    }
    return out;
}

OracleComparison compare_with_oracle(const HamiltonianFamily& f, double tol, int max_depth) {
    OracleComparison c;
    auto orc = discriminant_eps(f, 100, 8);
    ScanOptions opt;
    const double im_min = 1e-6;
    auto sat = saturate_scan(f, 1.0, im_min, max_depth, opt);
    c.total_winding = sat.scan.total_winding;
    c.diabolic = static_cast<int>(sat.scan.diabolic.size());
    std::vector<cplx> roots;
    for (const auto& e : orc.eps)
        if (e.multiplicity == 1 && e.lambda.imag() > im_min) roots.push_back(e.lambda);
    c.oracle_count = static_cast<int>(roots.size());
    c.scan_count = static_cast<int>(sat.scan.eps.size());
    std::vector<bool> used(roots.size(), false);
    for (const auto& ep : sat.scan.eps) {
        int best = -1;
        double bd = INFINITY;
        for (size_t k = 0; k < roots.size(); ++k)
            if (!used[k] && std::abs(roots[k] - ep.lambda) < bd) bd = std::abs(roots[k] - ep.lambda), best = int(k);
        if (best < 0) continue;
        c.max_distance = std::max(c.max_distance, bd);
        if (bd <= tol) used[best] = true, ++c.matched;
    }
    c.equivalent = c.scan_count == c.oracle_count && c.matched == c.scan_count && sat.scan.unresolved.empty();
    return c;
}

CheckReport cmd_check(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& p = cfg.params;
    const std::string suite = p.at("suite");
    if (suite != "oracle" && suite != "moments" && suite != "all")
        throw InputError("check: --suite must be oracle, moments or all");
    CheckReport rep;
    rep.summary = {{"metadata", metadata(cfg)}, {"checks", json::array()}};
    auto record = [&](const std::string& name, bool ok, const std::string& detail) {
        rep.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + name + ": " + detail);
        rep.summary["checks"].push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
        rep.pass = rep.pass && ok;
    };
    if (suite == "oracle" || suite == "all") {
        for (Model m : {Model::qpt2, Model::qpt1p}) {
            ModelParams mp;
            mp.N = p.value("N", 4);
            say(ctx, "check: oracle equivalence for " + to_string(m));
            auto c = compare_with_oracle(make_family(m, mp), 1e-8);
            std::ostringstream d;
            d << "scan " << c.scan_count << " EPs, oracle " << c.oracle_count << " simple roots, matched "
              << c.matched << ", max distance " << c.max_distance << ", diabolic " << c.diabolic;
            record("oracle-" + to_string(m), c.equivalent, d.str());
        }
    }
    if (suite == "moments" || suite == "all") {
        const int d = p.value("d", 64);
        const long samples = p.value("samples", 10000L);
        auto h0 = reference_spectrum(ReferenceH0::ho, d);
        for (EnsembleKind k : {EnsembleKind::diag_rect, EnsembleKind::diag_norm, EnsembleKind::full, EnsembleKind::offd}) {
            say(ctx, "check: moments for " + to_string(k));
            auto spec = make_spec(k, h0.energies, p.value("seed", 1ULL), samples);
            auto m = moment_statistics(spec, h0.energies, ctx.threads);
            const double D = m.D_E0;
            bool ok = std::abs(m.M_V.stat.mean) <= 3 * m.M_V.stat.sem + 1e-12 * std::sqrt(D) &&
                      std::abs(m.K.stat.mean) <= 3 * m.K.stat.sem + 1e-12 * D &&
                      std::abs(m.D_V.stat.mean - D) <= 0.01 * D;
            if (k == EnsembleKind::offd) ok = ok && m.M_V.stat.var == 0 && m.K.stat.var == 0;
            std::ostringstream s;
            s << "<M_V> = " << m.M_V.stat.mean << " +- " << m.M_V.stat.sem << ", <K> = " << m.K.stat.mean << " +- "
              << m.K.stat.sem << ", <D_V>/D_E = " << m.D_V.stat.mean / D;
            record("moments-" + to_string(k), ok, s.str());
        }
    }
    return rep;
}

Artifacts run_cached(const RunConfig& cfg, bool use_cache, const std::function<Artifacts()>& compute) {
    const auto dir = default_cache_dir();
    const std::string key = cache_key(cfg);
    if (use_cache) {
        if (auto blobs = cache_load(dir, key)) {
            Artifacts a;
            for (size_t i = 0; i + 1 < blobs->size(); i += 2) a.push_back({(*blobs)[i], (*blobs)[i + 1]});
            return a;
        }
    }
    Artifacts a = compute();
    if (use_cache) {
        std::vector<std::string> blobs;
        for (const auto& x : a) blobs.push_back(x.suffix), blobs.push_back(x.content);
        try {
            cache_store(dir, key, blobs);
        } catch (const std::exception&) {
            // An unwritable cache only costs recomputation.
        }
    }
    return a;
}

void emit(const Artifacts& a, const std::string& out, std::ostream& os) {
    if (out.empty() || out == "-") {
        if (!a.empty()) os << a.front().content;
        return;
    }
    std::filesystem::path primary(out);
    std::filesystem::path stem = primary.parent_path() / primary.stem();
    for (const auto& x : a) {
        if (x.suffix.empty()) write_atomic(primary, x.content);
        else write_atomic(stem.string() + x.suffix, x.content);
    }
}

}  // namespace epqpt
