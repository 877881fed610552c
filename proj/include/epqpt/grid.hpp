#pragma once

#include "epqpt/eigentrack.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace epqpt {

struct GridRegion {
    double re_min = 0, re_max = 1, im_min = 1e-4, im_max = 1;
    bool log_im = false;
    int max_depth = 40;
};

// Integer-coordinate cell of the dyadic grid; u, v in [0, 2^max_depth].
struct GridCell {
    int64_t u = 0, v = 0, size = 0;
    int depth = 0;
};

struct LoopInfo {
    std::vector<int> perm;  // canonical slot at ll -> slot after one loop
    int winding = 0;
    double min_gap = 0;
    bool identity() const;
    bool transposition() const;
};

// Corners and half-edges are cached so that children reuse the tracked
// perimeter of their parent. Not thread-safe; use one grid per worker.
class CellGrid {
public:
    CellGrid(const HamiltonianFamily& f, const GridRegion& r, const TrackOptions& opt);

    cplx point(int64_t u, int64_t v) const;
    Rect rect(const GridCell& c) const;
    GridCell root() const { return {0, 0, int64_t(1) << region_.max_depth, 0}; }
    std::array<GridCell, 4> children(const GridCell& c) const;

    LoopInfo loop(const GridCell& c);
    const std::vector<cplx>& corner(int64_t u, int64_t v);
    long eigensolves() const { return tracker_.eigensolves(); }
    const GridRegion& region() const { return region_; }
    const HamiltonianFamily& family() const { return *f_; }
    SegmentTracker& tracker() { return tracker_; }

private:
    struct Key {
        int64_t a, b, c, e;
        bool operator==(const Key& o) const { return a == o.a && b == o.b && c == o.c && e == o.e; }
    };
    struct KeyHash {
        size_t operator()(const Key& k) const;
    };
    struct Edge {
        std::vector<int> perm;
        double phase = 0;
        double min_gap = 0;
    };

    // Canonical direction: from (u0,v0) to (u1,v1) with u0<=u1, v0<=v1, axis aligned.
    const Edge& edge(int64_t u0, int64_t v0, int64_t u1, int64_t v1);
    Edge trace_direct(int64_t u0, int64_t v0, int64_t u1, int64_t v1);
    static Edge compose(const Edge& x, const Edge& y);

    const HamiltonianFamily* f_;
    GridRegion region_;
    TrackOptions opt_;
    SegmentTracker tracker_;
    double span_;
    std::unordered_map<Key, std::vector<cplx>, KeyHash> corners_;
    std::unordered_map<Key, Edge, KeyHash> edges_;
};

}  // namespace epqpt
