#include "epqpt/epfinder.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>

namespace epqpt {

namespace {

double resid_tol(const HamiltonianFamily& f, const ScanOptions& opt) {
    return opt.residual_tolerance > 0 ? opt.residual_tolerance : 1e-6 * f.scale();
}

xp::Dense<double> to_dense(const RMat& M) {
    xp::Dense<double> A(static_cast<int>(M.rows()));
    for (int i = 0; i < A.n; ++i)
        for (int k = 0; k < A.n; ++k) A(i, k) = M(i, k);
    return A;
}

bool inside(const Rect& r, cplx z, double margin) {
    return z.real() >= r.re_min - margin && z.real() <= r.re_max + margin && z.imag() >= r.im_min - margin &&
           z.imag() <= r.im_max + margin;
}

// Closest pair gap and its midpoint.
std::pair<double, cplx> closest_pair(const std::vector<cplx>& e) {
    double g = std::numeric_limits<double>::infinity();
    cplx mid;
    for (size_t i = 0; i < e.size(); ++i)
        for (size_t j = i + 1; j < e.size(); ++j) {
            double x = std::abs(e[i] - e[j]);
            if (x < g) g = x, mid = 0.5 * (e[i] + e[j]);
        }
    return {g, mid};
}

// An interior gap far below the perimeter minimum hints at a zero of D the
// winding missed; near-degeneracies just outside the cell do not qualify.
bool probe_suspicious(CellGrid& g, const GridCell& c, const ScanOptions& opt, double thr, double perimeter_gap) {
    thr = std::min(thr, 0.1 * perimeter_gap);
    Rect r = g.rect(c);
    const int P = opt.probe_points;
    for (int a = 0; a < P; ++a)
        for (int b = 0; b < P; ++b) {
            cplx z(r.re_min + (r.re_max - r.re_min) * (a + 0.5) / P, r.im_min + (r.im_max - r.im_min) * (b + 0.5) / P);
            if (min_pair_gap(g.tracker().eval(z)) < thr) return true;
        }
    return false;
}

void dedup(std::vector<ExceptionalPoint>& eps, double radius) {
    sort_eps(eps);
    std::vector<ExceptionalPoint> out;
    for (auto& e : eps) {
        bool merged = false;
        for (auto& o : out)
            if (std::abs(o.lambda - e.lambda) <= radius) {
                o.merged += e.merged;
                merged = true;
                break;
            }
        if (!merged) out.push_back(e);
    }
    eps = std::move(out);
}

// Connected components of the coupling graph of H0 and V: levels of
// different components cross freely and never form an avoided crossing.
std::vector<int> coupling_blocks(const HamiltonianFamily& f) {
    const int d = f.dim();
    std::vector<int> parent(d);
    for (int i = 0; i < d; ++i) parent[i] = i;
    std::function<int(int)> root = [&](int i) { return parent[i] == i ? i : parent[i] = root(parent[i]); };
    for (int i = 0; i < d; ++i)
        for (int k = i + 1; k < d; ++k)
            if (f.H0(i, k) != 0 || f.V(i, k) != 0) parent[root(i)] = root(k);
    std::vector<int> out(d);
    for (int i = 0; i < d; ++i) out[i] = root(i);
    return out;
}

double golden_min(const std::function<double(double)>& fn, double a, double b, int iters = 80) {
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = fn(c), fd = fn(d);
    for (int k = 0; k < iters && b - a > 1e-15 * (1 + std::abs(a)); ++k) {
        if (fc < fd) {
            b = d, d = c, fd = fc;
            c = b - gr * (b - a);
            fc = fn(c);
        } else {
            a = c, c = d, fc = fd;
            d = a + gr * (b - a);
            fd = fn(d);
        }
    }
    return std::min(fc, fd);
}

}  // namespace

void sort_eps(std::vector<ExceptionalPoint>& eps) {
    std::sort(eps.begin(), eps.end(), [](const ExceptionalPoint& a, const ExceptionalPoint& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
        return a.lambda.imag() < b.lambda.imag();
    });
}

std::optional<ExceptionalPoint> newton_refine(const HamiltonianFamily& f, cplx lambda0, int level_a, int level_b,
                                              double tol) {
    CMat M = evaluate_at(f, lambda0);
    Eigen::ComplexEigenSolver<CMat> es(M, true);
    if (es.info() != Eigen::Success) return std::nullopt;
    const int d = f.dim();
    int ia = level_a, ib = level_b;
    if (ia < 0 || ib < 0) {
        double g = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                double x = std::abs(es.eigenvalues()(i) - es.eigenvalues()(j));
                if (x < g) g = x, ia = i, ib = j;
            }
    }
    if (ia < 0) return std::nullopt;
    auto H0 = to_dense(f.H0), V = to_dense(f.V);
    cplx E0 = 0.5 * (es.eigenvalues()(ia) + es.eigenvalues()(ib));
    for (int which : {ia, ib}) {
        std::vector<cplx> x0(d);
        for (int i = 0; i < d; ++i) x0[i] = es.eigenvectors()(i, which);
        auto r = xp::newton_ep<double>(H0, V, lambda0, E0, x0, tol, 40);
        if (!r.converged) continue;
        ExceptionalPoint ep;
        ep.lambda = r.lambda;
        ep.energy = r.energy;
        if (ep.lambda.imag() < 0) ep.lambda = std::conj(ep.lambda), ep.energy = std::conj(ep.energy);
        ep.method = "newton";
        ep.residual = closest_pair(eigvals(evaluate_at(f, ep.lambda))).first;
        return ep;
    }
    return std::nullopt;
}

std::optional<ExceptionalPoint> refine_in_grid(CellGrid& g, const GridCell& cell, const ScanOptions& opt) {
    const HamiltonianFamily& f = g.family();
    const double rtol = resid_tol(f, opt);
    GridCell c = cell;
    while (true) {
        Rect r = g.rect(c);
        const double diam = r.diameter();
        if (opt.newton) {
            auto ep = newton_refine(f, r.center(), -1, -1);
            if (ep && inside(r, ep->lambda, 1e-12 * diam) && ep->residual <= rtol) {
                ep->cell_size = diam;
                ep->method = "monodromy";
                return ep;
            }
        }
        if (diam <= opt.tol || c.size < 2) {
            ExceptionalPoint ep;
            ep.lambda = r.center();
            auto cp = closest_pair(g.tracker().eval(ep.lambda));
            ep.residual = cp.first;
            ep.energy = cp.second;
            ep.cell_size = diam;
            ep.method = "monodromy";
            return ep;
        }
        auto kids = g.children(c);
        int found = -1, sum = 0;
        for (int k = 0; k < 3; ++k) {
            int w = g.loop(kids[k]).winding;
            sum += w;
            if (w == 1 && found < 0) found = k;
            if (w < 0 || w > 1) throw NumericalError("refine_ep: inconsistent child winding");
        }
        if (found < 0) {
            if (sum != 0) throw NumericalError("refine_ep: inconsistent child winding");
            found = 3;
        } else if (sum != 1) {
            throw NumericalError("refine_ep: more than one child carries the EP");
        }
        c = kids[found];
    }
}

ScanResult scan_region(const HamiltonianFamily& f, const ScanRegion& region, const ScanOptions& opt) {
    if (!(region.im_min > 0)) throw InputError("scan region requires im_min > 0");
    if (!(region.re_max > region.re_min && region.im_max > region.im_min)) throw InputError("scan region is empty");
    if (f.dim() < 2) throw InputError("scan_region requires d >= 2");
    GridRegion gr{region.re_min, region.re_max, region.im_min, region.im_max, region.log_im, region.max_depth};
    CellGrid g(f, gr, opt.track);
    const double diam = std::hypot(region.re_max - region.re_min, region.im_max - region.im_min);
    const double min_cell = region.min_cell > 0 ? region.min_cell : 1e-3 * diam;
    const double dp_floor = std::max(opt.tol, 1e-12 * diam);
    const double probe_thr = 10 * resid_tol(f, opt);

    ScanResult res;
    std::deque<GridCell> queue{g.root()};
    bool first = true;
    while (!queue.empty()) {
        GridCell c = queue.front();
        queue.pop_front();
        ++res.cells;
        Rect r = g.rect(c);
        LoopInfo li;
        try {
            li = g.loop(c);
        } catch (const StepUnderflow& e) {
            res.unresolved.push_back({e.where(), -1, r.diameter(), false});
            if (first) break;
            continue;
        }
        if (first) res.total_winding = li.winding, first = false;
        if (li.winding == 0) {
            if (opt.interior_probe && r.diameter() > min_cell && c.size >= 2 && probe_suspicious(g, c, opt, probe_thr, li.min_gap))
                for (auto& k : g.children(c)) queue.push_back(k);
            continue;
        }
        if (li.winding == 1 && li.transposition()) {
            try {
                auto ep = refine_in_grid(g, c, opt);
                if (ep) res.eps.push_back(*ep);
            } catch (const NumericalError&) {
                res.unresolved.push_back({r.center(), 1, r.diameter(), false});
            }
            continue;
        }
        if (c.size >= 2 && r.diameter() > dp_floor) {
            for (auto& k : g.children(c)) queue.push_back(k);
            continue;
        }
        Degeneracy dg{r.center(), li.winding, r.diameter(), li.identity()};
        if (li.identity() && li.winding % 2 == 0) res.diabolic.push_back(dg);
        else res.unresolved.push_back(dg);
    }
    dedup(res.eps, 2 * opt.tol);
    if (opt.assign_levels)
        for (auto& ep : res.eps) {
            try {
                ep.levels = assign_avoided_crossing(f, ep, opt.track).levels;
            } catch (const NumericalError&) {
                ep.levels.reset();
            }
        }
    res.eigensolves = g.eigensolves();
    return res;
}

ExceptionalPoint refine_ep(const HamiltonianFamily& f, const Rect& cell, double tol, const ScanOptions& opt) {
    GridRegion gr{cell.re_min, cell.re_max, cell.im_min, cell.im_max, false, 40};
    CellGrid g(f, gr, opt.track);
    LoopInfo li = g.loop(g.root());
    if (li.winding != 1) throw NumericalError("refine_ep: cell does not enclose exactly one EP");
    ScanOptions o = opt;
    o.tol = tol;
    auto ep = refine_in_grid(g, g.root(), o);
    if (!ep) throw NumericalError("refine_ep: localization failed");
    return *ep;
}

SaturationResult saturate_scan(const HamiltonianFamily& f, double r0, double im_min, int max_depth,
                               const ScanOptions& opt, double r_max) {
    SaturationResult out;
    // Bauer-Fike on V + mu (H0 - c): the spectrum stays simple while
    // |mu| (E0_max - E0_min) / 2 < gap(V) / 2, so every EP has |lambda| <= spread(H0) / gap(V).
    {
        Eigen::SelfAdjointEigenSolver<RMat> e0(f.H0, Eigen::EigenvaluesOnly), ev(f.V, Eigen::EigenvaluesOnly);
        const auto& w0 = e0.eigenvalues();
        const auto& wv = ev.eigenvalues();
        double gap = std::numeric_limits<double>::infinity();
        for (int k = 0; k + 1 < wv.size(); ++k) gap = std::min(gap, wv(k + 1) - wv(k));
        const double spread = w0(w0.size() - 1) - w0(0);
        if (gap > 1e-10 * std::max(1.0, wv.cwiseAbs().maxCoeff())) out.bound_radius = spread / gap;
    }
    const int max_count = f.dim() * (f.dim() - 1) / 2;
    double R = r0, last_ok = 0;
    while (true) {
        if (R > r_max) throw NumericalError("saturate_scan: no saturation below r_max");
        GridRegion gr{-R, R, im_min, R, true, max_depth};
        CellGrid g(f, gr, opt.track);
        int w = 0;
        try {
            w = g.loop(g.root()).winding;
        } catch (const NumericalError&) {
            // Double precision cannot follow the branches on this perimeter.
            out.limit_radius = R;
            break;
        }
        out.history.emplace_back(R, w);
        last_ok = R;
        size_t n = out.history.size();
        const bool enclosed = (out.bound_radius > 0 && R >= out.bound_radius) || w == max_count;
        const bool stable = out.bound_radius == 0 && n >= 3 && w > 0 && out.history[n - 2].second == w &&
                            out.history[n - 3].second == w;
        if (enclosed || stable) {
            out.saturated = true;
            break;
        }
        R *= 2;
    }
    if (last_ok == 0) throw NumericalError("saturate_scan: initial perimeter could not be tracked");
    out.radius = last_ok;
    ScanRegion reg{-last_ok, last_ok, im_min, last_ok, max_depth, 0, true};
    out.scan = scan_region(f, reg, opt);
    return out;
}

NearestSearchResult nearest_ep_search(const HamiltonianFamily& f, double anchor, const NearestSearchOptions& opt) {
    NearestSearchResult out;
    double r = opt.r0 > 0 ? opt.r0 : 0.05 * (1 + std::abs(anchor));
    r = std::max(r, 4 * opt.im_min);
    while (r <= opt.r_max) {
        GridRegion gr{anchor - r, anchor + r, opt.im_min, r, true, opt.max_depth};
        CellGrid g(f, gr, opt.scan.track);
        const double dp_floor = std::max(opt.scan.tol, 1e-12 * r);
        using Item = std::tuple<double, int64_t, int64_t, int64_t, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        auto bound = [&](const GridCell& c) {
            Rect q = g.rect(c);
            double dx = std::max({0.0, q.re_min - anchor, anchor - q.re_max});
            return std::hypot(dx, q.im_min);
        };
        GridCell root = g.root();
        pq.emplace(bound(root), root.u, root.v, root.size, root.depth);
        std::optional<ExceptionalPoint> best;
        double best_d = std::numeric_limits<double>::infinity();
        std::vector<Degeneracy> dps;
        while (!pq.empty()) {
            auto [bd, u, v, s, dep] = pq.top();
            pq.pop();
            if (bd >= best_d) break;
            GridCell c{u, v, s, dep};
            Rect q = g.rect(c);
            ++out.cells;
            LoopInfo li = g.loop(c);
            if (li.winding == 0) continue;
            if (li.winding == 1 && li.transposition()) {
                auto ep = refine_in_grid(g, c, opt.scan);
                if (ep) {
                    double dist = std::abs(ep->lambda - cplx(anchor, 0));
                    if (dist < best_d) best_d = dist, best = ep;
                }
                continue;
            }
            if (c.size >= 2 && q.diameter() > dp_floor) {
                for (auto& k : g.children(c)) pq.emplace(bound(k), k.u, k.v, k.size, k.depth);
                continue;
            }
            dps.push_back({q.center(), li.winding, q.diameter(), li.identity()});
        }
        out.eigensolves += g.eigensolves();
        if (best && best_d <= r) {
            out.ep = best;
            out.diabolic = dps;
            return out;
        }
        r = best ? best_d * 1.0001 : 2 * r;
    }
    return out;
}

XEpResult avoided_crossing_ep_double(const HamiltonianFamily& f, double lambda_re, int level_a, int level_b) {
    RMat H = f.H0 + lambda_re * f.V;
    Eigen::SelfAdjointEigenSolver<RMat> es(H);
    const int d = f.dim();
    std::vector<cplx> x0(d);
    for (int i = 0; i < d; ++i) x0[i] = cplx(es.eigenvectors()(i, level_a - 1), es.eigenvectors()(i, level_b - 1));
    cplx E0 = 0.5 * (es.eigenvalues()(level_a - 1) + es.eigenvalues()(level_b - 1));
    auto r = xp::newton_ep<double>(to_dense(f.H0), to_dense(f.V), cplx(lambda_re, 0), E0, x0, 1e-15, 80);
    XEpResult out;
    out.lambda = r.lambda.imag() < 0 ? std::conj(r.lambda) : r.lambda;
    out.iterations = r.iterations;
    out.converged = r.converged;
    if (r.converged) out.residual = closest_pair(eigvals(evaluate_at(f, out.lambda))).first;
    return out;
}

XEpResult avoided_crossing_ep(const HamiltonianFamily& f, double lambda_re, int level_a, int level_b,
                              unsigned digits) {
    using xp::XComplex;
    using xp::XReal;
    xp::PrecisionScope ps(digits);
    XFamily x = to_extended(f);
    const int d = f.dim();
    xp::Dense<XReal> H(d);
    XReal lr(lambda_re);
    if (f.critical_lambda && std::abs(*f.critical_lambda - lambda_re) < 1e-15 && f.model == Model::qpt1p)
        lr = XReal(1) / (1 + XReal(f.params.c) * XReal(f.params.c));
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) H(i, k) = x.H0(i, k) + lr * x.V(i, k);
    xp::Dense<XReal> Q;
    auto w = xp::jacobi_eigh(H, &Q);
    std::vector<XComplex> x0(d);
    for (int i = 0; i < d; ++i) x0[i] = XComplex(Q(i, level_a - 1), Q(i, level_b - 1));
    XComplex E0((w[level_a - 1] + w[level_b - 1]) / 2, XReal(0));
    XReal tol = boost::multiprecision::pow(XReal(10), -static_cast<int>(digits) + 8);
    auto r = xp::newton_ep<XReal>(x.H0, x.V, XComplex(lr, XReal(0)), E0, x0, tol, 200);
    XEpResult out;
    out.extended = true;
    out.lambda_x = r.lambda.imag() < 0 ? xp::cconj(r.lambda) : r.lambda;
    out.lambda = cplx(out.lambda_x.real().convert_to<double>(), out.lambda_x.imag().convert_to<double>());
    out.iterations = r.iterations;
    out.converged = r.converged;
    if (r.converged) {
        xp::Dense<XComplex> M(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) M(i, k) = XComplex(x.H0(i, k)) + out.lambda_x * x.V(i, k);
        auto ev = xp::hessenberg_qr_eigenvalues(M, 200);
        XReal g = -1;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                XReal t = xp::cabs(ev[i] - ev[j]);
                if (g < 0 || t < g) g = t;
            }
        out.residual = g.convert_to<double>();
    }
    return out;
}

AvoidedCrossing assign_avoided_crossing(const HamiltonianFamily& f, const ExceptionalPoint& ep,
                                        const TrackOptions& opt) {
    AvoidedCrossing ac;
    const double x = ep.lambda.real(), y = ep.lambda.imag();
    ac.lambda_real = x;
    std::optional<std::pair<int, int>> pair;
    try {
        auto tr = trace_path(f, {cplx(x, 0), cplx(x, y * (1 - 1e-6))}, opt);
        const auto& E = tr.final.energies;
        double g = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < E.size(); ++i)
            for (size_t j = i + 1; j < E.size(); ++j) {
                double t = std::abs(E[i] - E[j]);
                if (t < g) {
                    g = t;
                    int a = tr.final.labels[i], b = tr.final.labels[j];
                    pair = std::make_pair(std::min(a, b), std::max(a, b));
                }
            }
    } catch (const NumericalError&) {
        pair.reset();
    }
    Eigen::SelfAdjointEigenSolver<RMat> es;
    if (pair) {
        // Adjacent within the coupling block that carries both levels.
        const int a = pair->first - 1, b = pair->second - 1;
        auto blocks = coupling_blocks(f);
        es.compute(f.H0 + x * f.V);
        auto block_of = [&](int n) {
            int arg = 0;
            es.eigenvectors().col(n).cwiseAbs().maxCoeff(&arg);
            return blocks[arg];
        };
        const int ba = block_of(a);
        bool adjacent = block_of(b) == ba;
        for (int k = a + 1; adjacent && k < b; ++k)
            if (block_of(k) == ba) adjacent = false;
        if (adjacent) ac.levels = pair;
    }
    if (pair) {
        const int a = pair->first - 1, b = pair->second - 1;
        auto gap = [&](double l) {
            es.compute(f.H0 + l * f.V, Eigen::EigenvaluesOnly);
            return es.eigenvalues()(b) - es.eigenvalues()(a);
        };
        double w = 3 * y;
        ac.min_spacing = std::min(gap(x), golden_min(gap, x - w, x + w));
        ac.F = ac.min_spacing / (2 * y);
    }
    return ac;
}

std::vector<double> phase_rigidity(const HamiltonianFamily& f, cplx lambda) {
    CMat M = evaluate_at(f, lambda);
    Eigen::ComplexEigenSolver<CMat> es(M, true);
    if (es.info() != Eigen::Success) throw NumericalError("phase_rigidity: eigensolver failed");
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    if (min_pair_gap(ev) < 1e-12 * f.scale()) throw NumericalError("phase_rigidity: at degeneracy");
    std::vector<std::pair<double, double>> rows;
    for (int n = 0; n < f.dim(); ++n) {
        CVec psi = es.eigenvectors().col(n);
        cplx tt = (psi.transpose() * psi)(0);
        rows.emplace_back(ev[n].real(), std::abs(tt) / psi.squaredNorm());
    }
    std::sort(rows.begin(), rows.end());
    std::vector<double> out;
    for (auto& r : rows) out.push_back(std::min(1.0, r.second));
    return out;
}

ExceptionalPoint nearest_ep(const std::vector<ExceptionalPoint>& eps, double anchor) {
    if (eps.empty()) throw InputError("nearest_ep: empty list");
    auto key = [&](const ExceptionalPoint& e) {
        return std::make_tuple(std::abs(e.lambda - cplx(anchor, 0)), e.lambda.imag(), e.lambda.real());
    };
    return *std::min_element(eps.begin(), eps.end(),
                             [&](const ExceptionalPoint& a, const ExceptionalPoint& b) { return key(a) < key(b); });
}

}  // namespace epqpt
