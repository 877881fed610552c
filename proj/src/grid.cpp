#include "epqpt/grid.hpp"

#include <cmath>

namespace epqpt {

namespace {

// Monotone skew keeps dyadic lines off symmetry axes of the region.
double skew(double x, double amp) { return x + amp * std::sin(M_PI * x) / M_PI; }

constexpr double kSkewRe = 0.0137;
constexpr double kSkewIm = 0.0093;

}  // namespace

bool LoopInfo::identity() const {
    for (size_t i = 0; i < perm.size(); ++i)
        if (perm[i] != static_cast<int>(i)) return false;
    return true;
}

bool LoopInfo::transposition() const {
    int moved = 0;
    for (size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] == static_cast<int>(i)) continue;
        ++moved;
        if (perm[perm[i]] != static_cast<int>(i)) return false;
    }
    return moved == 2;
}

size_t CellGrid::KeyHash::operator()(const Key& k) const {
    uint64_t h = 1469598103934665603ull;
    for (int64_t x : {k.a, k.b, k.c, k.e}) {
        h ^= static_cast<uint64_t>(x) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<size_t>(h);
}

CellGrid::CellGrid(const HamiltonianFamily& f, const GridRegion& r, const TrackOptions& opt)
    : f_(&f), region_(r), opt_(opt), tracker_(f, opt) {
    if (!(r.re_max > r.re_min && r.im_max > r.im_min)) throw InputError("grid region needs positive area");
    if (r.log_im && !(r.im_min > 0)) throw InputError("log grading needs im_min > 0");
    if (r.max_depth < 1 || r.max_depth > 60) throw InputError("max_depth must lie in [1, 60]");
    span_ = std::hypot(r.re_max - r.re_min, r.im_max - r.im_min);
}

cplx CellGrid::point(int64_t u, int64_t v) const {
    const double U = std::ldexp(1.0, region_.max_depth);
    double x = skew(static_cast<double>(u) / U, kSkewRe);
    double y = skew(static_cast<double>(v) / U, kSkewIm);
    double re = region_.re_min + (region_.re_max - region_.re_min) * x;
    double im = region_.log_im ? region_.im_min * std::pow(region_.im_max / region_.im_min, y)
                               : region_.im_min + (region_.im_max - region_.im_min) * y;
    if (u == 0) re = region_.re_min;
    if (v == 0) im = region_.im_min;
    return {re, im};
}

Rect CellGrid::rect(const GridCell& c) const {
    cplx a = point(c.u, c.v), b = point(c.u + c.size, c.v + c.size);
    return {a.real(), b.real(), a.imag(), b.imag()};
}

std::array<GridCell, 4> CellGrid::children(const GridCell& c) const {
    int64_t h = c.size / 2;
    int dd = c.depth + 1;
    return {GridCell{c.u, c.v, h, dd}, GridCell{c.u + h, c.v, h, dd}, GridCell{c.u, c.v + h, h, dd},
            GridCell{c.u + h, c.v + h, h, dd}};
}

const std::vector<cplx>& CellGrid::corner(int64_t u, int64_t v) {
    Key k{u, v, 0, 0};
    auto it = corners_.find(k);
    if (it != corners_.end()) return it->second;
    return corners_.emplace(k, tracker_.eval(point(u, v))).first->second;
}

CellGrid::Edge CellGrid::compose(const Edge& x, const Edge& y) {
    Edge r;
    r.perm.resize(x.perm.size());
    for (size_t i = 0; i < x.perm.size(); ++i) r.perm[i] = y.perm[x.perm[i]];
    r.phase = x.phase + y.phase;
    r.min_gap = std::min(x.min_gap, y.min_gap);
    return r;
}

CellGrid::Edge CellGrid::trace_direct(int64_t u0, int64_t v0, int64_t u1, int64_t v1) {
    const auto& s = corner(u0, v0);
    const auto& e = corner(u1, v1);
    auto res = tracker_.track(point(u0, v0), point(u1, v1), s, &e, span_);
    return Edge{res.slot, res.pair_phase, res.min_gap};
}

const CellGrid::Edge& CellGrid::edge(int64_t u0, int64_t v0, int64_t u1, int64_t v1) {
    Key k{u0, v0, u1, v1};
    auto it = edges_.find(k);
    if (it != edges_.end()) return it->second;
    int64_t len = (u1 - u0) + (v1 - v0);
    Edge out;
    if (len >= 2) {
        int64_t um = u0 + (u1 - u0) / 2, vm = v0 + (v1 - v0) / 2;
        Key k1{u0, v0, um, vm}, k2{um, vm, u1, v1};
        auto i1 = edges_.find(k1);
        Edge e1 = i1 != edges_.end() ? i1->second : trace_direct(u0, v0, um, vm);
        auto i2 = edges_.find(k2);
        Edge e2 = i2 != edges_.end() ? i2->second : trace_direct(um, vm, u1, v1);
        edges_.emplace(k1, e1);
        edges_.emplace(k2, e2);
        out = compose(e1, e2);
    } else {
        out = trace_direct(u0, v0, u1, v1);
    }
    return edges_.emplace(k, std::move(out)).first->second;
}

LoopInfo CellGrid::loop(const GridCell& c) {
    const int64_t u0 = c.u, v0 = c.v, u1 = c.u + c.size, v1 = c.v + c.size;
    const Edge bottom = edge(u0, v0, u1, v0);
    const Edge right = edge(u1, v0, u1, v1);
    const Edge top = edge(u0, v1, u1, v1);
    const Edge left = edge(u0, v0, u0, v1);
    const size_t d = bottom.perm.size();
    std::vector<int> top_inv(d), left_inv(d);
    for (size_t i = 0; i < d; ++i) {
        top_inv[top.perm[i]] = static_cast<int>(i);
        left_inv[left.perm[i]] = static_cast<int>(i);
    }
    LoopInfo li;
    li.perm.resize(d);
    for (size_t i = 0; i < d; ++i) li.perm[i] = left_inv[top_inv[right.perm[bottom.perm[i]]]];
    double phase = bottom.phase + right.phase - top.phase - left.phase;
    double w = phase / M_PI;
    li.winding = static_cast<int>(std::lround(w));
    if (std::abs(w - li.winding) > 0.1) throw NumericalError("cell loop: non-integral discriminant winding");
    li.min_gap = std::min(std::min(bottom.min_gap, right.min_gap), std::min(top.min_gap, left.min_gap));
    return li;
}

}  // namespace epqpt
