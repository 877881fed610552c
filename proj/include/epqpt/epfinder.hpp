#pragma once

#include "epqpt/eigentrack.hpp"
#include "epqpt/grid.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace epqpt {

struct ExceptionalPoint {
    cplx lambda;                                // Im > 0 representative
    std::optional<std::pair<int, int>> levels;  // real-axis labels (1-based), nullopt = unassigned
    double residual = 0;                        // min pairwise eigenvalue gap at lambda
    double cell_size = 0;
    std::string method = "monodromy";           // monodromy | discriminant | newton
    cplx energy;
    int multiplicity = 1;                       // zeros of D merged (oracle only)
    int merged = 1;                             // dedup provenance count
};

struct ScanRegion {
    double re_min = 0, re_max = 1, im_min = 1e-4, im_max = 1;
    int max_depth = 40;
    double min_cell = 0;  // 0: 1e-3 * region diameter
    bool log_im = false;
};

// A zero cluster of D that is not a single EP.
struct Degeneracy {
    cplx lambda;
    int winding = 0;
    double cell_size = 0;
    bool identity_monodromy = false;
};

struct ScanOptions {
    TrackOptions track;
    double tol = 1e-10;                // localization tolerance in lambda
    double residual_tolerance = 0;     // 0: 1e-6 * family scale
    bool interior_probe = true;        // 5x5 min-gap probe before discarding a zero-winding cell
    int probe_points = 5;
    bool newton = true;
    bool assign_levels = false;
};

struct ScanResult {
    std::vector<ExceptionalPoint> eps;
    std::vector<Degeneracy> diabolic;    // identity monodromy, even winding, unsplittable
    std::vector<Degeneracy> unresolved;  // max depth reached otherwise
    int total_winding = 0;               // zeros of D in the region, with multiplicity
    long cells = 0;
    long eigensolves = 0;
};

ScanResult scan_region(const HamiltonianFamily& f, const ScanRegion& region, const ScanOptions& opt = {});

// Localize the single EP inside a rectangle whose monodromy is a transposition.
ExceptionalPoint refine_ep(const HamiltonianFamily& f, const Rect& cell, double tol, const ScanOptions& opt = {});

// Refinement inside an existing grid; the cell must have winding 1.
std::optional<ExceptionalPoint> refine_in_grid(CellGrid& g, const GridCell& cell, const ScanOptions& opt);

// Box [-R, R] x [im_min, R] doubled until it is known to enclose every EP
// (R >= bound_radius, or the count reaches d(d-1)/2) or, when V has a
// degenerate spectrum, until the enclosed count of D zeros is unchanged
// twice; then scanned. When the perimeter can no longer be tracked in double
// precision the last trackable box is scanned and `saturated` stays false.
struct SaturationResult {
    ScanResult scan;
    double radius = 0;
    bool saturated = false;
    double limit_radius = 0;                      // first untrackable R (0: none)
    double bound_radius = 0;                      // |lambda| bound on all EPs (0: V degenerate)
    std::vector<std::pair<double, int>> history;  // (R, winding)
};
SaturationResult saturate_scan(const HamiltonianFamily& f, double r0, double im_min, int max_depth,
                               const ScanOptions& opt = {}, double r_max = 1e6);

struct NearestSearchOptions {
    ScanOptions scan;
    double r0 = 0;          // 0: heuristic from H0 spacing and ||V||
    double im_min = 1e-6;
    double r_max = 1e4;
    int max_depth = 40;
};
struct NearestSearchResult {
    std::optional<ExceptionalPoint> ep;
    std::vector<Degeneracy> diabolic;
    long eigensolves = 0;
    long cells = 0;
};
NearestSearchResult nearest_ep_search(const HamiltonianFamily& f, double anchor, const NearestSearchOptions& opt = {});

// Newton on the bordered EP system, double precision.
std::optional<ExceptionalPoint> newton_refine(const HamiltonianFamily& f, cplx lambda0, int level_a, int level_b,
                                              double tol = 1e-14);

// Extended-precision nearest EP to a real point: Newton seeded by
// x0 = psi_a + i psi_b from the real-axis eigenvectors at lambda_re.
struct XEpResult {
    cplx lambda;
    xp::XComplex lambda_x;
    int iterations = 0;
    bool converged = false;
    bool extended = false;
    double residual = 0;
};
XEpResult avoided_crossing_ep(const HamiltonianFamily& f, double lambda_re, int level_a, int level_b,
                              unsigned digits = 50);
XEpResult avoided_crossing_ep_double(const HamiltonianFamily& f, double lambda_re, int level_a, int level_b);

struct OracleResult {
    std::vector<ExceptionalPoint> eps;  // distinct zeros with Im > 0, multiplicity recorded
    std::vector<cplx> real_roots;       // distinct zeros on the real axis
    int degree = 0;
    int precision_digits = 0;
    double max_residual = 0;            // extended-precision eigenvalue gap at simple roots
};
OracleResult discriminant_eps(const HamiltonianFamily& f, int precision_digits = 100, int d_oracle_max = 8);

struct AvoidedCrossing {
    double lambda_real = 0;
    std::optional<std::pair<int, int>> levels;
    double min_spacing = 0;
    double F = 0;
    bool assigned() const { return levels.has_value(); }
};
AvoidedCrossing assign_avoided_crossing(const HamiltonianFamily& f, const ExceptionalPoint& ep,
                                        const TrackOptions& opt = {});

std::vector<double> phase_rigidity(const HamiltonianFamily& f, cplx lambda);

ExceptionalPoint nearest_ep(const std::vector<ExceptionalPoint>& eps, double anchor);

void sort_eps(std::vector<ExceptionalPoint>& eps);

}  // namespace epqpt
