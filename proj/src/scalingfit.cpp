#include "epqpt/scalingfit.hpp"

#include "epqpt/parallel.hpp"
#include "epqpt/stats.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace epqpt {

FirstOrderFit fit_first_order(const std::vector<ScalingPoint>& pts) {
    FirstOrderFit fit;
    std::vector<const ScalingPoint*> use;
    for (const auto& p : pts) {
        if (!(p.im > 0)) throw InputError("fit_first_order: Im lambda_1 must be positive");
        if (p.im < 1e-12 && !p.extended) {
            fit.dropped_N.push_back(p.N);
            continue;
        }
        use.push_back(&p);
        fit.used_N.push_back(p.N);
    }
    if (use.size() < 5) throw InputError("fit_first_order: need at least 5 usable points");
    const int m = static_cast<int>(use.size());
    RMat X(m, 3);
    RVec y(m);
    for (int i = 0; i < m; ++i) {
        X(i, 0) = -static_cast<double>(use[i]->N);
        X(i, 1) = -std::log(static_cast<double>(use[i]->N));
        X(i, 2) = 1.0;
        y(i) = std::log(use[i]->im);
    }
    LinFit lf;
    try {
        lf = least_squares(X, y);
    } catch (const NumericalError&) {
        throw NumericalError("fit_first_order: N and ln N are collinear over this span; widen the N range");
    }
    fit.eta = lf.coef(0);
    fit.zeta = lf.coef(1);
    fit.intercept = lf.coef(2);
    fit.R2 = lf.R2;
    return fit;
}

PowerLaw power_law_fit(const std::vector<int>& N, const std::vector<double>& y) {
    if (N.size() != y.size() || N.size() < 2) throw InputError("power_law_fit: need >= 2 matched points");
    const int m = static_cast<int>(N.size());
    RMat X(m, 2);
    RVec v(m);
    for (int i = 0; i < m; ++i) {
        if (!(y[i] > 0) || N[i] <= 0) throw InputError("power_law_fit: values must be positive");
        X(i, 0) = 1.0;
        X(i, 1) = std::log(static_cast<double>(N[i]));
        v(i) = std::log(y[i]);
    }
    auto lf = least_squares(X, v);
    return {-lf.coef(1), lf.R2};
}

KappaFit fit_kappa(const std::vector<ScalingPoint>& pts) {
    if (pts.size() < 3) throw InputError("fit_kappa: need at least 3 points");
    KappaFit k;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto &a = pts[i], &b = pts[i + 1];
        if (!(a.im > 0 && b.im > 0) || b.N <= a.N) throw InputError("fit_kappa: need increasing N and Im > 0");
        k.intervals.emplace_back(a.N, b.N);
        k.kappa.push_back(-(std::log(b.im) - std::log(a.im)) / (std::log(double(b.N)) - std::log(double(a.N))));
    }
    std::vector<int> n;
    std::vector<double> y;
    for (size_t i = pts.size() - 3; i < pts.size(); ++i) n.push_back(pts[i].N), y.push_back(pts[i].im);
    auto pl = power_law_fit(n, y);
    k.tail = pl.exponent;
    k.tail_R2 = pl.R2;
    k.increasing = k.decreasing = k.kappa.size() >= 2;
    for (size_t i = 0; i + 1 < k.kappa.size(); ++i) {
        if (!(k.kappa[i + 1] > k.kappa[i])) k.increasing = false;
        if (!(k.kappa[i + 1] < k.kappa[i])) k.decreasing = false;
    }
    return k;
}

ScalingPoint nearest_ep_point(Model m, const ModelParams& p, const NearestScalingOptions& opt) {
    auto f = make_family(m, p);
    ScalingPoint sp;
    sp.N = p.N;
    if (m == Model::qpt1 || m == Model::qpt1p) {
        const double lc = *f.critical_lambda;
        auto r = avoided_crossing_ep_double(f, lc, 1, 2);
        if (!r.converged || r.lambda.imag() < opt.extended_below) {
            r = avoided_crossing_ep(f, lc, 1, 2, opt.digits);
            if (!r.converged) throw ConvergenceError("nearest_ep_point: extended Newton did not converge", {});
        }
        sp.re = r.lambda.real();
        sp.im = r.lambda.imag();
        sp.extended = r.extended;
        return sp;
    }
    const double anchor = f.critical_lambda ? *f.critical_lambda : 0.0;
    auto res = nearest_ep_search(f, anchor, opt.search);
    if (!res.ep) throw NumericalError("nearest_ep_point: no EP found within r_max");
    sp.re = res.ep->lambda.real();
    sp.im = res.ep->lambda.imag();
    return sp;
}

std::vector<ScalingPoint> nearest_ep_points(Model m, const ModelParams& base, const std::vector<int>& Ns,
                                            const NearestScalingOptions& opt, int threads) {
    std::vector<ScalingPoint> out(Ns.size());
    // Extended precision changes a process-global default; run serially then.
    const bool may_extend = m == Model::qpt1 || m == Model::qpt1p;
    parallel_for(static_cast<long>(Ns.size()), may_extend ? 1 : threads, [&](long i) {
        ModelParams p = base;
        p.N = Ns[i];
        out[i] = nearest_ep_point(m, p, opt);
    });
    return out;
}

namespace {

double gap_double(const HamiltonianFamily& f, double lambda) {
    Eigen::SelfAdjointEigenSolver<RMat> es(f.H0 + lambda * f.V, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1) - es.eigenvalues()(0);
}

}  // namespace

GapPoint minimal_gap(const HamiltonianFamily& f, double center, double halfwidth, bool allow_extended,
                     unsigned digits) {
    GapPoint gp;
    gp.N = f.params.N;
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double a = center - halfwidth, b = center + halfwidth;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double g1 = gap_double(f, x1), g2 = gap_double(f, x2);
    for (int it = 0; it < 80 && b - a > 1e-15 * (1 + std::abs(center)); ++it) {
        if (g1 < g2) {
            b = x2, x2 = x1, g2 = g1;
            x1 = b - phi * (b - a), g1 = gap_double(f, x1);
        } else {
            a = x1, x1 = x2, g1 = g2;
            x2 = a + phi * (b - a), g2 = gap_double(f, x2);
        }
    }
    gp.lambda = g1 < g2 ? x1 : x2;
    gp.gap = std::min(g1, g2);
    if (gp.gap >= 1e-13 * f.scale()) return gp;
    if (!allow_extended) {
        gp.dropped = true;
        return gp;
    }
    // Below the double floor: repeat the search on extended-precision spectra.
    using xp::XReal;
    xp::PrecisionScope ps(digits);
    XFamily x = to_extended(f);
    const int d = f.dim();
    auto gap_x = [&](const XReal& l) {
        xp::Dense<XReal> H(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) H(i, k) = x.H0(i, k) + l * x.V(i, k);
        auto w = xp::jacobi_eigh(H);
        return XReal(w[1] - w[0]);
    };
    XReal xc(center);
    if (f.model == Model::qpt1p && f.critical_lambda && std::abs(center - *f.critical_lambda) < 1e-15)
        xc = XReal(1) / (1 + XReal(f.params.c) * XReal(f.params.c));
    XReal A = xc - halfwidth, B = xc + halfwidth;
    const XReal ph = (boost::multiprecision::sqrt(XReal(5)) - 1) / 2;
    XReal y1 = B - ph * (B - A), y2 = A + ph * (B - A);
    XReal h1 = gap_x(y1), h2 = gap_x(y2);
    for (int it = 0; it < 60; ++it) {
        if (h1 < h2) {
            B = y2, y2 = y1, h2 = h1;
            y1 = B - ph * (B - A), h1 = gap_x(y1);
        } else {
            A = y1, y1 = y2, h1 = h2;
            y2 = A + ph * (B - A), h2 = gap_x(y2);
        }
    }
    gp.lambda = static_cast<double>(h1 < h2 ? y1 : y2);
    gp.gap = static_cast<double>(h1 < h2 ? h1 : h2);
    gp.extended = true;
    return gp;
}

EdifResult edif_consistency(Model m, const ModelParams& base, const std::vector<ScalingPoint>& eps,
                            bool allow_extended) {
    EdifResult r;
    std::vector<ScalingPoint> gap_pts;
    for (const auto& e : eps) {
        ModelParams p = base;
        p.N = e.N;
        auto f = make_family(m, p);
        auto g = minimal_gap(f, e.re, 4 * e.im, allow_extended);
        g.ratio = g.gap / (2 * e.im);
        r.gaps.push_back(g);
        if (g.dropped) continue;
        gap_pts.push_back({e.N, g.lambda, g.gap, g.extended});
    }
    r.im_fit = fit_first_order(eps);
    r.gap_fit = fit_first_order(gap_pts);
    r.eta_rel_diff = std::abs(r.gap_fit.eta - r.im_fit.eta) / r.im_fit.eta;
    return r;
}

PowerLaw gap_exponent_at(Model m, const ModelParams& base, const std::vector<int>& Ns, double lambda,
                         std::vector<double>* gaps) {
    std::vector<double> g;
    for (int N : Ns) {
        ModelParams p = base;
        p.N = N;
        g.push_back(gap_double(make_family(m, p), lambda));
    }
    if (gaps) *gaps = g;
    return power_law_fit(Ns, g);
}

}  // namespace epqpt
