#include "epqpt/commands.hpp"
#include "epqpt/ensembles.hpp"
#include "epqpt/epfinder.hpp"
#include "epqpt/io.hpp"
#include "epqpt/parallel.hpp"
#include "epqpt/scalingfit.hpp"
#include "epqpt/semiclassics.hpp"
#include "epqpt/stats.hpp"

#include <CLI11.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

using namespace epqpt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    json data = json::object();
};

std::string fmt(double x, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << x;
    return s.str();
}

// Results shared between criteria: scaling data (3 -> 5) and serialized
// outputs for the determinism rerun (8-12 -> 13).
struct Store {
    int threads = 0;
    std::optional<std::vector<ScalingPoint>> qpt1_points;
    std::optional<KappaFit> qpt2_kappa;
    std::map<std::string, std::string> serialized;
};

constexpr uint64_t kSeedCrossings = 0x5EED0008ULL;
constexpr uint64_t kSeedMoments = 0x5EED0009ULL;
constexpr uint64_t kSeedRotation = 0x5EED0010ULL;
constexpr uint64_t kSeedNearest = 0x5EED0012ULL;
constexpr long kRotationSamples = 2000;
constexpr long kNearestSamples = 500;
const std::vector<int> kNearestDims{8, 16, 32, 64};

std::vector<int> range_list(int a, int b) {
    std::vector<int> v;
    for (int n = a; n <= b; ++n) v.push_back(n);
    return v;
}

// ---------------------------------------------------------------- 1, 2

Outcome c1_oracle(Store&) {
    Outcome o;
    o.pass = true;
    std::ostringstream d;
    for (Model m : {Model::qpt2, Model::qpt1p}) {
        ModelParams p;
        p.N = 4;
        auto c = compare_with_oracle(make_family(m, p), 1e-8);
        const bool ok = c.equivalent && c.scan_count == 10;
        o.pass = o.pass && ok;
        d << to_string(m) << ": scan " << c.scan_count << ", oracle " << c.oracle_count << ", matched " << c.matched
          << ", max dist " << fmt(c.max_distance, 3) << (ok ? "" : " (expected 10)") << "; ";
        o.data[to_string(m)] = {{"scan", c.scan_count},          {"oracle", c.oracle_count},
                                {"matched", c.matched},          {"max_distance", c.max_distance},
                                {"diabolic", c.diabolic},        {"equivalent", c.equivalent}};
    }
    o.detail = d.str();
    return o;
}

Outcome c2_saturation(Store&) {
    Outcome o;
    ModelParams p;
    p.N = 8;
    auto f = make_family(Model::qpt2, p);
    auto a = saturate_scan(f, 1.0, 1e-6, 40);
    auto b = saturate_scan(f, 1.0, 1e-6, 32);
    const size_t na = a.scan.eps.size(), nb = b.scan.eps.size();
    o.pass = a.saturated && b.saturated && na == 36 && nb == na;
    o.detail = "depth 40: " + std::to_string(na) + " EPs (saturated " + (a.saturated ? "yes" : "no") +
               ", R " + fmt(a.radius) + ", limit R " + fmt(a.limit_radius) + "); depth 32: " + std::to_string(nb) +
               " EPs; expected 36";
    for (auto* s : {&a, &b}) {
        json h = json::array();
        for (auto& [R, w] : s->history) h.push_back({R, w});
        o.data[s == &a ? "depth40" : "depth32"] = {{"eps", s->scan.eps.size()},     {"saturated", s->saturated},
                                                   {"radius", s->radius},           {"limit_radius", s->limit_radius},
                                                   {"bound_radius", s->bound_radius}, {"diabolic", s->scan.diabolic.size()},
                                                   {"history", h}};
    }
    return o;
}

// ---------------------------------------------------------------- 3, 4, 5

Outcome c3_first_order(Store& st) {
    Outcome o;
    const auto Ns = range_list(5, 25);
    ModelParams base;
    base.a = 3.0;
    base.c = 4.0;
    auto p1 = nearest_ep_points(Model::qpt1, base, Ns);
    auto p1p = nearest_ep_points(Model::qpt1p, base, Ns);
    st.qpt1_points = p1;
    auto f1 = fit_first_order(p1), f1p = fit_first_order(p1p);
    bool ext_ok = true;
    int n_ext = 0;
    for (const auto* v : {&p1, &p1p})
        for (const auto& p : *v) {
            if (p.im < 1e-12 && !p.extended) ext_ok = false;
            n_ext += p.extended;
        }
    const bool ok1 = f1.R2 >= 0.995 && f1.eta >= 1.2 && f1.eta <= 1.8 && f1.zeta >= 0.2 && f1.zeta <= 0.9;
    const bool ok1p = f1p.R2 >= 0.995 && f1p.eta >= 0.9 && f1p.eta <= 1.4 && f1p.zeta >= 0.2 && f1p.zeta <= 0.9;
    o.pass = ok1 && ok1p && ext_ok && n_ext > 0 && f1.dropped_N.empty() && f1p.dropped_N.empty();
    o.detail = "qpt1 eta " + fmt(f1.eta) + " zeta " + fmt(f1.zeta) + " R2 " + fmt(f1.R2, 6) + "; qpt1p eta " +
               fmt(f1p.eta) + " zeta " + fmt(f1p.zeta) + " R2 " + fmt(f1p.R2, 6) + "; extended points " +
               std::to_string(n_ext);
    json a = json::array(), b = json::array();
    for (auto& p : p1) a.push_back(to_json(p));
    for (auto& p : p1p) b.push_back(to_json(p));
    o.data = {{"qpt1", {{"points", a}, {"fit", to_json(f1)}}}, {"qpt1p", {{"points", b}, {"fit", to_json(f1p)}}}};
    return o;
}

const std::vector<int> kQpt2Ns{8, 16, 32, 64, 128};

Outcome c4_second_order(Store& st) {
    Outcome o;
    auto pts = nearest_ep_points(Model::qpt2, ModelParams{}, kQpt2Ns, {}, st.threads);
    auto k = fit_kappa(pts);
    st.qpt2_kappa = k;
    const double last = k.kappa.back();
    o.pass = k.increasing && last >= 0.45 && last <= 0.80;
    std::ostringstream d;
    d << "kappa(N) =";
    for (double v : k.kappa) d << " " << fmt(v, 3);
    d << "; increasing " << (k.increasing ? "yes" : "no") << ", last interval " << fmt(last, 3)
      << (last >= 0.45 && last <= 0.80 ? " in" : " outside") << " [0.45, 0.80]";
    o.detail = d.str();
    json a = json::array();
    for (auto& p : pts) a.push_back(to_json(p));
    o.data = {{"points", a}, {"kappa", to_json(k)}};
    return o;
}

Outcome c5_edif(Store& st) {
    Outcome o;
    ModelParams base;
    base.a = 3.0;
    if (!st.qpt1_points) st.qpt1_points = nearest_ep_points(Model::qpt1, base, range_list(5, 25));
    auto e = edif_consistency(Model::qpt1, base, *st.qpt1_points);
    if (!st.qpt2_kappa) st.qpt2_kappa = fit_kappa(nearest_ep_points(Model::qpt2, ModelParams{}, kQpt2Ns, {}, st.threads));
    std::vector<double> gaps;
    auto g = gap_exponent_at(Model::qpt2, ModelParams{}, kQpt2Ns, 1.0, &gaps);
    const double kl = st.qpt2_kappa->kappa.back();
    const bool ok1 = e.eta_rel_diff <= 0.05;
    const bool ok2 = std::abs(g.exponent - 1.0 / 3) <= 0.08 && std::abs(kl - g.exponent) >= 0.15;
    o.pass = ok1 && ok2;
    o.detail = "qpt1 eta(gap) " + fmt(e.gap_fit.eta) + " vs eta(Im) " + fmt(e.im_fit.eta) + " (rel diff " +
               fmt(e.eta_rel_diff, 3) + "); qpt2 gap exponent " + fmt(g.exponent, 3) + " vs kappa " + fmt(kl, 3);
    json gp = json::array();
    for (auto& x : e.gaps)
        gp.push_back({{"N", x.N}, {"lambda", x.lambda}, {"gap", x.gap}, {"ratio", x.ratio}, {"extended", x.extended}});
    o.data = {{"qpt1_gaps", gp},
              {"gap_fit", to_json(e.gap_fit)},
              {"im_fit", to_json(e.im_fit)},
              {"qpt2_gaps", gaps},
              {"qpt2_gap_exponent", g.exponent},
              {"qpt2_gap_R2", g.R2}};
    return o;
}

// ---------------------------------------------------------------- 6, 7

Outcome c6_quartic(Store&) {
    Outcome o;
    const int d = 513;
    auto f = family_qpt2(d - 1);
    Eigen::SelfAdjointEigenSolver<RMat> es(f.H0 + *f.critical_lambda * f.V, Eigen::EigenvaluesOnly);
    std::vector<double> E(es.eigenvalues().data(), es.eigenvalues().data() + d);
    auto fit = fit_quartic_scale(E, QuarticReading::excitation, 5, 128);
    o.pass = fit.max_dev_window <= 0.05;
    o.detail = "omega " + fmt(fit.omega) + ", max relative deviation " + fmt(100 * fit.max_dev_window, 3) +
               "% over 5 <= n <= 128";
    o.data = {{"omega", fit.omega}, {"max_dev", fit.max_dev_window}};
    return o;
}

Outcome c7_doublets(Store&) {
    Outcome o;
    std::vector<CriticalLevels> lv;
    for (int N = 5; N <= 25; ++N) lv.push_back(critical_levels(family_qpt1(N, 3.0), 0.0, 6, true));
    auto fits = fit_doublet_splittings(lv, 3);
    const auto& f = fits.at(0);
    const auto& last = lv.back();
    const double w = doublewell_omega(last);
    const double d2 = std::abs(last.gaps[1] - w) / w, d4 = std::abs(last.gaps[3] - w) / w;
    o.pass = f.n == 1 && f.R2 >= 0.99 && f.used_N.size() == 21 && d2 <= 0.1 && d4 <= 0.1;
    o.detail = "lowest doublet R2 " + fmt(f.R2, 6) + " (B " + fmt(f.B) + ", C " + fmt(f.C) + ", " +
               std::to_string(f.used_N.size()) + " N used); even spacings at N=25 deviate " + fmt(100 * d2, 3) +
               "% and " + fmt(100 * d4, 3) + "% from their mean";
    o.data = {{"B", f.B}, {"C", f.C}, {"R2", f.R2}, {"omega", w}, {"spacing_dev", {d2, d4}}};
    return o;
}

// ---------------------------------------------------------------- 8

std::string run_crossings(const ReferenceSpectrum& h0, EnsembleKind kind, int threads, json* summary,
                          bool* ok_bins, bool* ok_chi2) {
    const auto s = slope_distribution(kind);
    auto spec = make_spec(kind, h0.energies, kSeedCrossings, 100000);
    const int nb = 16;
    std::vector<double> edges{0.0};
    for (int k = 1; k < nb; ++k) edges.push_back(crossing_quantile(h0, s, spec.sigma, double(k) / nb));
    edges.push_back(INFINITY);
    auto h = crossing_samples_diagonal(h0, spec, edges, true, threads);
    const double pairs = 0.5 * h0.dim() * (h0.dim() - 1);
    // Tail bin dropped: the per-sample fractions sum to one.
    std::vector<RVec> per;
    per.reserve(h.per_sample.size());
    for (const auto& row : h.per_sample) {
        RVec v(nb - 1);
        for (int k = 0; k < nb - 1; ++k) v(k) = row[k] / pairs;
        per.push_back(v);
    }
    auto hot = hotelling_chi2(per, RVec::Constant(nb - 1, 1.0 / nb));
    double worst = 0;
    for (int k = 0; k < nb; ++k) {
        std::vector<double> x;
        x.reserve(per.size());
        for (const auto& row : h.per_sample) x.push_back(row[k] / pairs);
        auto m = mean_stat(x);
        worst = std::max(worst, std::abs(m.mean - 1.0 / nb) / m.sem);
    }
    *ok_bins = worst <= 3.0;
    *ok_chi2 = hot.p_value > 0.01;
    (*summary) = {{"max_bin_z", worst}, {"chi2", hot.statistic}, {"dof", hot.dof}, {"p", hot.p_value},
                  {"positive_fraction", double(h.positive) / double(h.total)}};
    json ser = {{"edges", json::array()}, {"counts", h.counts}, {"overflow", h.overflow}, {"positive", h.positive}};
    for (double e : edges) ser["edges"].push_back(fmt_double(e));
    return ser.dump();
}

double density_mode(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma) {
    double best = 0, arg = 0;
    std::vector<double> grid;
    for (double t = -40; t <= 5; t += 0.005) grid.push_back(std::exp(t));
    auto c = crossing_density_analytic(h0, s, sigma, grid);
    for (size_t k = 0; k < grid.size(); ++k)
        if (c.density[k] > best) best = c.density[k], arg = grid[k];
    return arg;
}

// Integral of the analytic density in the log variable.
double density_integral(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma) {
    const int per_unit = 2000;
    const double lo = -60, hi = 25;
    std::vector<double> t, x;
    for (int k = 0; k <= (hi - lo) * per_unit; ++k) t.push_back(lo + double(k) / per_unit), x.push_back(std::exp(t.back()));
    auto c = crossing_density_analytic(h0, s, sigma, x);
    // Composite Simpson.
    double acc = 0;
    const size_t n = x.size() - 1;
    for (size_t k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
        acc += w * c.density[k] * x[k];
    }
    return acc / (3.0 * per_unit);
}

Outcome c8_crossings(Store& st) {
    Outcome o;
    o.pass = true;
    std::ostringstream d;
    std::map<std::string, double> mode;
    for (auto kind : {EnsembleKind::diag_rect, EnsembleKind::diag_norm}) {
        const auto s = slope_distribution(kind);
        for (auto hk : {ReferenceH0::c1, ReferenceH0::c2, ReferenceH0::ho}) {
            auto h0 = reference_spectrum(hk, 16);
            const std::string tag = to_string(kind) + "/" + to_string(hk);
            json sum;
            bool ok_bins = false, ok_chi2 = false;
            st.serialized["c8/" + tag] = run_crossings(h0, kind, st.threads, &sum, &ok_bins, &ok_chi2);
            const double sigma = sigma_for(h0.energies, kind);
            const double integral = density_integral(h0, s, sigma);
            const bool ok_int = std::abs(integral - 1) <= 1e-6;
            mode[tag] = density_mode(h0, s, sigma);
            sum["integral"] = integral;
            sum["mode"] = mode[tag];
            sum["median"] = crossing_quantile(h0, s, sigma, 0.5);
            o.data[tag] = sum;
            o.pass = o.pass && ok_bins && ok_chi2 && ok_int;
            d << tag << " z<=" << fmt(sum["max_bin_z"].get<double>(), 3) << " p=" << fmt(sum["p"].get<double>(), 3)
              << (ok_bins && ok_chi2 && ok_int ? "" : " FAIL") << "; ";
        }
        const std::string k = to_string(kind);
        const double m1 = mode[k + "/c1"], m2 = mode[k + "/c2"], mh = mode[k + "/ho"];
        const bool order = m1 <= 0.1 * m2 && m2 < mh;
        o.pass = o.pass && order;
        d << k << " modes c1 " << fmt(m1, 3) << ", c2 " << fmt(m2, 3) << ", ho " << fmt(mh, 3)
          << (order ? " ordered" : " NOT ordered") << "; ";
    }
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------- 9

Outcome c9_moments(Store& st) {
    Outcome o;
    o.pass = true;
    auto h0 = reference_spectrum(ReferenceH0::ho, 64);
    std::ostringstream d;
    for (auto kind : {EnsembleKind::diag_rect, EnsembleKind::diag_norm, EnsembleKind::full, EnsembleKind::offd}) {
        auto m = moment_statistics(make_spec(kind, h0.energies, kSeedMoments, 10000), h0.energies, st.threads);
        st.serialized["c9/" + to_string(kind)] = to_json(m).dump();
        const double D = m.D_E0;
        bool ok = std::abs(m.M_V.stat.mean) <= 3 * m.M_V.stat.sem + 1e-12 * std::sqrt(D) &&
                  std::abs(m.K.stat.mean) <= 3 * m.K.stat.sem + 1e-12 * D &&
                  std::abs(m.D_V.stat.mean - D) <= 0.01 * D;
        std::vector<std::string> bad;
        for (const MomentEntry* e : {&m.M_V, &m.D_V, &m.K}) {
            const bool v_ok = e->predicted_var == 0 ? e->stat.var == 0
                                                    : std::abs(e->stat.var / e->predicted_var - 1) <= 0.2;
            if (!v_ok) bad.push_back("var(" + e->name + ") ratio " + fmt(e->stat.var / e->predicted_var, 3));
            ok = ok && v_ok;
        }
        o.pass = o.pass && ok;
        d << to_string(kind) << (ok ? " ok" : " FAIL");
        for (auto& b : bad) d << " " << b;
        d << "; ";
        o.data[to_string(kind)] = to_json(m);
    }
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------- 10, 11

std::string serialize_eps(const std::vector<std::vector<cplx>>& per) {
    std::string s;
    for (const auto& v : per) {
        for (auto z : v) s += fmt_double(z.real()) + "," + fmt_double(z.imag()) + ";";
        s += "\n";
    }
    return s;
}

EpHistogramResult rotation_run(EnsembleKind kind, long samples, int threads, double failure_budget = 0.01) {
    auto h0 = reference_spectrum(ReferenceH0::ho, 16);
    auto spec = make_spec(kind, h0.energies, kSeedRotation, samples);
    EpHistogramOptions opt;
    opt.threads = threads;
    opt.failure_budget = failure_budget;
    return ep_histogram(spec, h0, opt);
}

constexpr int kAngleBins = 12;
constexpr double kAngleRadius = 3.0;  // half disk inscribed in the scan box

std::optional<EpHistogramResult> g_full, g_offd;

Outcome c10_rotation(Store& st) {
    Outcome o;
    g_full = rotation_run(EnsembleKind::full, kRotationSamples, st.threads);
    st.serialized["c10"] = serialize_eps(g_full->per_sample);
    std::vector<RVec> per;
    std::vector<long> totals(kAngleBins, 0);
    long n_eps = 0;
    for (size_t i = 0; i < g_full->per_sample.size(); ++i) {
        if (std::find(g_full->failed.begin(), g_full->failed.end(), long(i)) != g_full->failed.end()) continue;
        std::vector<double> c(kAngleBins, 0);
        double tot = 0;
        for (auto z : g_full->per_sample[i]) {
            if (std::abs(z) > kAngleRadius) continue;
            int b = std::min(kAngleBins - 1, int(std::arg(z) / std::numbers::pi * kAngleBins));
            c[b] += 1, tot += 1;
        }
        // Contrasts against the uniform share, last bin dropped.
        RVec v(kAngleBins - 1);
        for (int k = 0; k < kAngleBins - 1; ++k) v(k) = c[k] - tot / kAngleBins;
        per.push_back(v);
        for (int k = 0; k < kAngleBins; ++k) totals[k] += long(c[k]);
        n_eps += long(tot);
    }
    auto hot = hotelling_chi2(per, RVec::Zero(kAngleBins - 1));
    o.pass = hot.p_value > 0.01;
    o.detail = std::to_string(per.size()) + " samples (" + std::to_string(g_full->failed.size()) + " failed), " +
               std::to_string(n_eps) + " EPs with |lambda| <= 3; chi2 " + fmt(hot.statistic) + " on " +
               std::to_string(hot.dof) + " dof, p = " + fmt(hot.p_value, 3);
    o.data = {{"angle_counts", totals},
              {"chi2", hot.statistic},
              {"p", hot.p_value},
              {"failed", g_full->failed},
              {"captured_mass", g_full->captured_mass},
              {"radial", {{"edges", g_full->radial.edges}, {"density", g_full->radial.density}}}};
    return o;
}

double mean_abs_cos(const EpHistogramResult& r, long* count) {
    double acc = 0;
    long n = 0;
    for (const auto& s : r.per_sample)
        for (auto z : s)
            if (std::abs(z) <= kAngleRadius) acc += std::abs(z.real()) / std::abs(z), ++n;
    *count = n;
    return n ? acc / double(n) : NAN;
}

Outcome c11_offd(Store& st) {
    Outcome o;
    if (!g_full) g_full = rotation_run(EnsembleKind::full, kRotationSamples, st.threads);
    g_offd = rotation_run(EnsembleKind::offd, kRotationSamples, st.threads);
    st.serialized["c11"] = serialize_eps(g_offd->per_sample);
    long nf = 0, no = 0;
    const double cf = mean_abs_cos(*g_full, &nf), co = mean_abs_cos(*g_offd, &no);
    o.pass = co <= 0.8 * cf;
    o.detail = "mean |Re|/|lambda|: offd " + fmt(co) + " (" + std::to_string(no) + " EPs), full " + fmt(cf) + " (" +
               std::to_string(nf) + " EPs), ratio " + fmt(co / cf, 3) + " (" + std::to_string(g_offd->failed.size()) +
               " offd samples failed)";
    o.data = {{"offd", co},
              {"full", cf},
              {"ratio", co / cf},
              {"failed", g_offd->failed},
              {"radial", {{"edges", g_offd->radial.edges}, {"density", g_offd->radial.density}}}};
    return o;
}

// ---------------------------------------------------------------- 12, 13

std::string serialize_nearest(const NearestEpStats& s) {
    std::string out;
    for (const auto& r : s.rows) {
        out += std::to_string(r.d) + ":";
        for (double v : r.per_sample) out += fmt_double(v) + ",";
        out += "\n";
    }
    return out;
}

json nearest_json(const NearestEpStats& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"d", r.d},
                        {"mean", r.abs_lambda.mean},
                        {"sem", r.abs_lambda.sem},
                        {"thr", r.lambda_thr},
                        {"failed", r.failed.size()}});
    return {{"rows", rows},
            {"mean_exponent", s.mean_exponent},
            {"mean_R2", s.mean_R2},
            {"thr_exponent", s.thr_exponent},
            {"thr_R2", s.thr_R2}};
}

Outcome c12_nearest(Store& st) {
    Outcome o;
    auto c2 = nearest_ep_stats(EnsembleKind::full, ReferenceH0::c2, kNearestDims, kNearestSamples, kSeedNearest, {},
                               st.threads);
    auto ho = nearest_ep_stats(EnsembleKind::full, ReferenceH0::ho, kNearestDims, kNearestSamples, kSeedNearest, {},
                               st.threads);
    st.serialized["c12/c2"] = serialize_nearest(c2);
    st.serialized["c12/ho"] = serialize_nearest(ho);
    const bool m2 = std::abs(c2.mean_exponent + 0.93) <= 0.2, mh = std::abs(ho.mean_exponent + 0.72) <= 0.2;
    const bool t2 = std::abs(c2.thr_exponent + 0.84) <= 0.25, th = std::abs(ho.thr_exponent + 0.55) <= 0.25;
    o.pass = m2 && mh && t2 && th;
    o.detail = "mean exponents c2 " + fmt(c2.mean_exponent, 3) + (m2 ? "" : " (out)") + ", ho " +
               fmt(ho.mean_exponent, 3) + (mh ? "" : " (out)") + "; threshold exponents c2 " +
               fmt(c2.thr_exponent, 3) + (t2 ? "" : " (out)") + ", ho " + fmt(ho.thr_exponent, 3) +
               (th ? "" : " (out)");
    o.data = {{"c2", nearest_json(c2)}, {"ho", nearest_json(ho)}};
    return o;
}

std::string prefix_lines(const std::string& s, long n) {
    size_t pos = 0;
    for (long k = 0; k < n && pos != std::string::npos; ++k) {
        pos = s.find('\n', pos);
        if (pos != std::string::npos) ++pos;
    }
    return s.substr(0, pos);
}

Outcome c13_determinism(Store& st) {
    Outcome o;
    const int alt = st.threads == 1 ? 3 : 1;
    std::vector<std::string> mismatch;
    auto compare = [&](const std::string& key, const std::string& a, const std::string& b) {
        o.data[key] = a == b;
        if (a != b) mismatch.push_back(key);
    };

    // Criteria 8 and 9 in full.
    if (!st.serialized.contains("c8/diag-rect/ho")) c8_crossings(st);
    if (!st.serialized.contains("c9/full")) c9_moments(st);
    Store alt_store;
    alt_store.threads = alt;
    c8_crossings(alt_store);
    c9_moments(alt_store);
    for (const auto& [k, v] : alt_store.serialized) compare(k, st.serialized.at(k), v);

    // Criteria 10-12 on a prefix of the samples; statistics are not judged
    // here, so failed samples do not abort.
    const long p10 = 40, p12 = 10;
    for (auto [key, kind] : {std::pair{"c10", EnsembleKind::full}, std::pair{"c11", EnsembleKind::offd}}) {
        auto r = rotation_run(kind, p10, alt, 1.0);
        auto ref = st.serialized.contains(key) ? prefix_lines(st.serialized.at(key), p10)
                                               : serialize_eps(rotation_run(kind, p10, st.threads, 1.0).per_sample);
        compare(std::string(key) + " prefix", ref, serialize_eps(r.per_sample));
    }
    for (auto hk : {ReferenceH0::c2, ReferenceH0::ho}) {
        const std::string key = "c12/" + to_string(hk);
        auto r = nearest_ep_stats(EnsembleKind::full, hk, kNearestDims, p12, kSeedNearest, {}, alt, 1.0);
        std::string ref;
        if (st.serialized.contains(key)) {
            // Keep the first p12 values of every row.
            std::istringstream is(st.serialized.at(key));
            std::string line;
            while (std::getline(is, line)) {
                auto colon = line.find(':');
                std::string head = line.substr(0, colon + 1), rest = line.substr(colon + 1);
                size_t pos = 0;
                for (long k = 0; k < p12; ++k) pos = rest.find(',', pos) + 1;
                ref += head + rest.substr(0, pos) + "\n";
            }
        } else {
            ref = serialize_nearest(
                nearest_ep_stats(EnsembleKind::full, hk, kNearestDims, p12, kSeedNearest, {}, st.threads, 1.0));
        }
        compare(key + " prefix", ref, serialize_nearest(r));
    }
    o.pass = mismatch.empty();
    o.detail = "compared " + std::to_string(o.data.size()) + " outputs at " + std::to_string(alt) + " vs " +
               std::to_string(st.threads) + " threads";
    for (auto& m : mismatch) o.detail += "; MISMATCH " + m;
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    Outcome (*fn)(Store&);
};

const std::vector<Criterion> kCriteria{
    {1, "oracle equivalence", 120, c1_oracle},
    {2, "count saturation", 600, c2_saturation},
    {3, "first-order scaling", 3600, c3_first_order},
    {4, "second-order scaling", 7200, c4_second_order},
    {5, "avoided-crossing consistency", 1800, c5_edif},
    {6, "quartic semiclassics", 60, c6_quartic},
    {7, "doublet form", 300, c7_doublets},
    {8, "crossing distribution", 600, c8_crossings},
    {9, "moment statistics", 300, c9_moments},
    {10, "GOE rotational symmetry", 4 * 3600, c10_rotation},
    {11, "offdiagonal shift", 4 * 3600, c11_offd},
    {12, "nearest-EP scaling", 12 * 3600, c12_nearest},
    {13, "determinism", 24 * 3600, c13_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria 1-13; one PASS/FAIL line per criterion"};
    int threads = 0;
    std::vector<int> only;
    std::string out_dir = "acceptance_artifacts";
    app.add_option("--threads", threads, "worker threads (0: available parallelism)");
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--out-dir", out_dir, "artifact directory");
    CLI11_PARSE(app, argc, argv);

    Store st;
    st.threads = threads > 0 ? threads : default_threads();
    fs::create_directories(out_dir);
    std::set<int> sel(only.begin(), only.end());
    json report = json::array();
    bool all = true;
    for (const auto& c : kCriteria) {
        if (!sel.empty() && !sel.contains(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn(st);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        all = all && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
                  << " [" << fmt(secs, 4) << " s" << (in_time ? "" : ", over budget") << "]" << std::endl;
        json entry = {{"criterion", c.id}, {"name", c.name}, {"pass", pass},    {"detail", o.detail},
                      {"seconds", secs},   {"budget_s", c.budget_s}, {"data", o.data}};
        write_atomic(fs::path(out_dir) / ("criterion_" + std::to_string(c.id) + ".json"), entry.dump(2) + "\n");
        entry.erase("data");
        report.push_back(entry);
    }
    write_atomic(fs::path(out_dir) / "summary.json", report.dump(2) + "\n");
    return all ? 0 : 1;
}
