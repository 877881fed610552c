#include "epqpt/eigentrack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace epqpt {

namespace {

bool canonical_less(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

constexpr double kPairSafety = 0.5;

void write_log_line(std::ostream& os, cplx lambda, const std::vector<cplx>& by_branch,
                    const std::vector<int>& labels) {
    std::vector<int> order(by_branch.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return canonical_less(by_branch[x], by_branch[y]); });
    char buf[128];
    std::snprintf(buf, sizeof buf, "{\"re\":%.17g,\"im\":%.17g,\"energies\":[", lambda.real(), lambda.imag());
    os << buf;
    for (size_t k = 0; k < order.size(); ++k) {
        const cplx& e = by_branch[order[k]];
        std::snprintf(buf, sizeof buf, "%s[%.17g,%.17g]", k ? "," : "", e.real(), e.imag());
        os << buf;
    }
    os << "],\"labels\":[";
    for (size_t k = 0; k < order.size(); ++k) os << (k ? "," : "") << labels[order[k]];
    os << "]}\n";
}

}  // namespace

std::vector<cplx> eigvals(const CMat& M) {
    Eigen::ComplexEigenSolver<CMat> es(M, false);
    std::vector<cplx> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    if (es.info() != Eigen::Success) throw ConvergenceError("eigvals: QR iteration did not converge", out);
    return out;
}

void sort_canonical(std::vector<cplx>& v) { std::sort(v.begin(), v.end(), canonical_less); }

std::vector<cplx> SpectrumEvaluator::operator()(cplx lambda) {
    evaluate_into(*f_, lambda, M_);
    solver_.compute(M_, false);
    const auto& ev = solver_.eigenvalues();
    std::vector<cplx> out(ev.data(), ev.data() + ev.size());
    ++count_;
    if (solver_.info() != Eigen::Success)
        throw ConvergenceError("eigvals: QR iteration did not converge", out);
    sort_canonical(out);
    return out;
}

double min_pair_gap(const std::vector<cplx>& e) {
    double g = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < e.size(); ++i)
        for (size_t j = i + 1; j < e.size(); ++j) g = std::min(g, std::abs(e[i] - e[j]));
    return g;
}

std::vector<double> nearest_gaps(const std::vector<cplx>& e) {
    const size_t d = e.size();
    std::vector<double> g(d, std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i + 1; j < d; ++j) {
            double x = std::abs(e[i] - e[j]);
            g[i] = std::min(g[i], x);
            g[j] = std::min(g[j], x);
        }
    return g;
}

// Hungarian algorithm (potentials form), O(n^3).
std::vector<int> optimal_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), INF);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = INF;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) minv[j] = cur, way[j] = j0;
                if (minv[j] < delta) delta = minv[j], j1 = j;
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) u[p[j]] += delta, v[j] -= delta;
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n);
    for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

namespace {

// Assign next values to predicted branch positions. Greedy, then optimal
// when greedy collides.
std::vector<int> assign_to_prediction(const std::vector<cplx>& pred, const std::vector<cplx>& next,
                                      bool force_optimal) {
    const int d = static_cast<int>(pred.size());
    std::vector<int> col(d, -1);
    if (!force_optimal) {
        std::vector<char> taken(d, 0);
        bool collision = false;
        for (int i = 0; i < d && !collision; ++i) {
            int best = -1;
            double bd = std::numeric_limits<double>::infinity();
            for (int j = 0; j < d; ++j) {
                double x = std::norm(pred[i] - next[j]);
                if (x < bd) bd = x, best = j;
            }
            if (taken[best]) collision = true;
            taken[best] = 1;
            col[i] = best;
        }
        if (!collision) return col;
    }
    std::vector<std::vector<double>> cost(d, std::vector<double>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cost[i][j] = std::norm(pred[i] - next[j]);
    return optimal_assignment(cost);
}

}  // namespace

BranchedSpectrum match_branches(const BranchedSpectrum& prev, const std::vector<cplx>& next_energies) {
    const size_t d = prev.energies.size();
    if (next_energies.size() != d) throw InputError("match_branches: dimension mismatch");
    std::vector<cplx> next = next_energies;
    sort_canonical(next);
    auto gaps = nearest_gaps(prev.energies);
    double min_gap = d > 1 ? *std::min_element(gaps.begin(), gaps.end()) : 1.0;
    std::vector<int> col = assign_to_prediction(prev.energies, next, false);
    double maxdisp = 0;
    for (size_t i = 0; i < d; ++i) maxdisp = std::max(maxdisp, std::abs(prev.energies[i] - next[col[i]]));
    if (maxdisp >= min_gap / 3) {
        col = assign_to_prediction(prev.energies, next, true);
        maxdisp = 0;
        for (size_t i = 0; i < d; ++i) maxdisp = std::max(maxdisp, std::abs(prev.energies[i] - next[col[i]]));
    }
    if (maxdisp >= min_gap / 2)
        throw AmbiguousMatch("match_branches: displacement exceeds half the minimal gap; halve the step");
    BranchedSpectrum out;
    out.lambda = prev.lambda;
    out.energies = next;
    out.labels.assign(d, 0);
    for (size_t i = 0; i < d; ++i) out.labels[col[i]] = prev.labels[i];
    return out;
}

SegmentTracker::SegmentTracker(const HamiltonianFamily& f, TrackOptions opt) : ev_(f), opt_(opt) {
    if (!(opt_.gap_safety > 0 && opt_.gap_safety < 0.5))
        throw InputError("gap_safety must lie in (0, 1/2)");
}

SegmentResult SegmentTracker::track(cplx a, cplx b, const std::vector<cplx>& start,
                                    const std::vector<cplx>* end_known, double path_length_for_floor,
                                    std::ostream* log, std::vector<int>* log_labels) {
    const int d = static_cast<int>(start.size());
    const double L = std::abs(b - a);
    SegmentResult res;
    res.end = start;
    res.min_gap = d > 1 ? min_pair_gap(start) : std::numeric_limits<double>::infinity();
    if (L == 0) {
        if (end_known) {
            auto col = assign_to_prediction(start, *end_known, false);
            res.slot = col;
            for (int i = 0; i < d; ++i) res.end[i] = (*end_known)[col[i]];
        }
        return res;
    }
    const double floor = opt_.min_step_rel * std::max(path_length_for_floor, L);
    double h = opt_.initial_step > 0 ? opt_.initial_step : (step_hint_ > 0 ? step_hint_ : L / 256);
    h = std::min(h, L);
    const double tr0 = ev_.family().H0.trace(), trv = ev_.family().V.trace();

    std::vector<cplx> E = start, vel(d, cplx(0)), pred(d), Enew(d);
    std::vector<double> gaps = nearest_gaps(E);
    const double gs = opt_.gap_safety;
    double t = 0;
    bool have_vel = false;
    while (true) {
        double hh = std::min(h, L - t);
        bool last = t + hh >= L * (1 - 1e-14);
        if (last) hh = L - t;
        cplx lam = last ? b : a + (b - a) * ((t + hh) / L);
        std::vector<cplx> W = (last && end_known) ? *end_known : ev_(lam);
        // Accept when every pair's relative prediction error is below
        // gap_safety times its separation. Squared-cost matching is blind to
        // errors shared by a cluster, so only relative errors matter; a wrong
        // pairing shows up as a relative error near twice the separation.
        // The linear predictor allows long steps along parallel branches, the
        // constant one avoids amplifying eigenvalue noise at tiny steps.
        auto attempt = [&](bool linear, std::vector<int>& c, std::vector<cplx>& En) {
            for (int i = 0; i < d; ++i) pred[i] = linear ? E[i] + vel[i] * hh : E[i];
            c = assign_to_prediction(pred, W, false);
            for (int i = 0; i < d; ++i) En[i] = W[c[i]];
            double rr = 0;
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) {
                    double base = std::abs(E[i] - E[j]);
                    double err = std::abs((En[i] - pred[i]) - (En[j] - pred[j]));
                    // Relative change of the pair difference bounds the
                    // per-step phase increment (|d arg| < 30 degrees).
                    double chg = std::abs((En[i] - En[j]) - (E[i] - E[j]));
                    if (err == 0 && chg == 0) continue;
                    if (base == 0) return std::numeric_limits<double>::infinity();
                    rr = std::max({rr, err / (gs * base), chg / (kPairSafety * base)});
                }
            return rr;
        };
        std::vector<int> col;
        double ratio = attempt(have_vel, col, Enew);
        if (ratio > 1.0 && have_vel) {
            std::vector<int> c2;
            std::vector<cplx> E2(d);
            double r2 = attempt(false, c2, E2);
            if (r2 < ratio) ratio = r2, col = std::move(c2), Enew = std::move(E2);
        }
        if (ratio > 1.0) {
            h = hh * std::max(0.1, 0.8 / std::sqrt(ratio));
            if (h < floor) throw StepUnderflow("trace_path: step underflow (EP on or near path)", a + (b - a) * (t / L));
            continue;
        }
        if (++res.steps > opt_.max_steps) throw NumericalError("trace_path: step budget exhausted");
        double phase = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                cplx q = (Enew[i] - Enew[j]) * std::conj(E[i] - E[j]);
                phase += std::atan2(q.imag(), q.real());
            }
        res.pair_phase += phase;
        if (d > 0) {
            cplx s(0);
            double sa = 0;
            for (int i = 0; i < d; ++i) s += Enew[i], sa += std::abs(Enew[i]);
            cplx tr = tr0 + lam * trv;
            if (std::abs(s - tr) > 1e-9 * (sa + 1)) throw NumericalError("trace_path: trace linearity violated");
        }
        for (int i = 0; i < d; ++i) vel[i] = (Enew[i] - E[i]) / hh;
        have_vel = true;
        E = Enew;
        gaps = nearest_gaps(E);
        if (d > 1) res.min_gap = std::min(res.min_gap, *std::min_element(gaps.begin(), gaps.end()));
        t += hh;
        if (log && log_labels) write_log_line(*log, lam, E, *log_labels);
        if (last) {
            if (end_known) res.slot = col;
            break;
        }
        double grow = ratio < 0.25 ? opt_.max_step_growth : (ratio < 0.5 ? 1.4 : 1.0);
        h = hh * grow;
    }
    step_hint_ = h;
    res.end = E;
    return res;
}

std::array<cplx, 4> Rect::corners() const {
    return {cplx(re_min, im_min), cplx(re_max, im_min), cplx(re_max, im_max), cplx(re_min, im_max)};
}

double Rect::diameter() const { return std::hypot(re_max - re_min, im_max - im_min); }

bool Monodromy::is_identity() const { return moved() == 0; }
bool Monodromy::is_transposition() const {
    if (moved() != 2) return false;
    for (size_t i = 0; i < permutation.size(); ++i)
        if (permutation[i] != static_cast<int>(i) && permutation[permutation[i]] != static_cast<int>(i)) return false;
    return true;
}
int Monodromy::moved() const {
    int m = 0;
    for (size_t i = 0; i < permutation.size(); ++i) m += permutation[i] != static_cast<int>(i);
    return m;
}

TraceResult trace_path(const HamiltonianFamily& f, const std::vector<cplx>& path, const TrackOptions& opt,
                       std::ostream* log) {
    if (path.empty()) throw InputError("trace_path: empty path");
    for (auto& p : path)
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) throw InputError("trace_path: non-finite path point");
    double total = 0;
    for (size_t k = 1; k < path.size(); ++k) total += std::abs(path[k] - path[k - 1]);
    TrackOptions o = opt;
    if (o.initial_step <= 0) o.initial_step = total > 0 ? total / 256 : 1.0;
    SegmentTracker tr(f, o);
    std::vector<cplx> E = tr.eval(path[0]);
    const int d = static_cast<int>(E.size());
    std::vector<int> labels(d);
    std::iota(labels.begin(), labels.end(), 1);
    if (log) write_log_line(*log, path[0], E, labels);
    TraceResult out;
    out.min_gap_seen = d > 1 ? min_pair_gap(E) : 0;
    for (size_t k = 1; k < path.size(); ++k) {
        auto seg = tr.track(path[k - 1], path[k], E, nullptr, total, log, &labels);
        E = seg.end;
        out.steps += seg.steps;
        out.pair_phase += seg.pair_phase;
        out.min_gap_seen = std::min(out.min_gap_seen, seg.min_gap);
    }
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return canonical_less(E[x], E[y]); });
    out.final.lambda = path.back();
    for (int k = 0; k < d; ++k) {
        out.final.energies.push_back(E[order[k]]);
        out.final.labels.push_back(labels[order[k]]);
    }
    return out;
}

Monodromy monodromy(const HamiltonianFamily& f, const Rect& rect, const TrackOptions& opt) {
    if (!(rect.re_max > rect.re_min && rect.im_max > rect.im_min)) throw InputError("monodromy: rectangle needs positive area");
    auto c = rect.corners();
    double per = 2 * ((rect.re_max - rect.re_min) + (rect.im_max - rect.im_min));
    TrackOptions o = opt;
    if (o.initial_step <= 0) o.initial_step = per / 256;
    SegmentTracker tr(f, o);
    std::vector<cplx> start = tr.eval(c[0]);
    const int d = static_cast<int>(start.size());
    Monodromy m;
    m.loop = rect;
    m.min_gap_seen = d > 1 ? min_pair_gap(start) : 0;
    std::vector<cplx> E = start;
    double phase = 0;
    for (int k = 0; k < 4; ++k) {
        bool closing = k == 3;
        auto seg = tr.track(c[k], c[(k + 1) % 4], E, closing ? &start : nullptr, per);
        E = seg.end;
        m.steps_used += seg.steps;
        phase += seg.pair_phase;
        m.min_gap_seen = std::min(m.min_gap_seen, seg.min_gap);
        if (closing) m.permutation = seg.slot;
    }
    double w = phase / M_PI;
    m.winding = static_cast<int>(std::lround(w));
    if (std::abs(w - m.winding) > 0.1) throw NumericalError("monodromy: non-integral discriminant winding");
    return m;
}

}  // namespace epqpt
