#pragma once

#include "epqpt/spinmodels.hpp"
#include "epqpt/types.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <iosfwd>
#include <vector>

namespace epqpt {

class AmbiguousMatch : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Eigenvalues of a general complex matrix (Hessenberg + shifted QR).
std::vector<cplx> eigvals(const CMat& M);

// Lexicographic (Re, then Im) order used as the canonical slot order.
void sort_canonical(std::vector<cplx>& v);

// Reusable solver state for repeated evaluations of one family.
class SpectrumEvaluator {
public:
    explicit SpectrumEvaluator(const HamiltonianFamily& f) : f_(&f) {}
    std::vector<cplx> operator()(cplx lambda);
    long count() const { return count_; }
    const HamiltonianFamily& family() const { return *f_; }

private:
    const HamiltonianFamily* f_;
    CMat M_;
    Eigen::ComplexEigenSolver<CMat> solver_;
    long count_ = 0;
};

struct BranchedSpectrum {
    cplx lambda;
    std::vector<cplx> energies;  // canonical order at lambda
    std::vector<int> labels;     // labels[i] tags energies[i]; values 1..d
};

// Labels taken from prev.labels, positions from next_energies (canonicalized).
BranchedSpectrum match_branches(const BranchedSpectrum& prev, const std::vector<cplx>& next_energies);

// Minimal total squared displacement assignment; result[i] = column of row i.
std::vector<int> optimal_assignment(const std::vector<std::vector<double>>& cost);

struct TrackOptions {
    double initial_step = 0.0;     // 0: path length / 256
    double gap_safety = 0.25;
    double min_step_rel = 1e-13;   // floor relative to path length
    double max_step_growth = 2.0;
    int max_steps = 2000000;
};

struct TraceResult {
    BranchedSpectrum final;
    long steps = 0;
    double min_gap_seen = 0;
    // Sum over branch pairs of the continuous change of arg(E_i - E_j).
    double pair_phase = 0;
};

TraceResult trace_path(const HamiltonianFamily& f, const std::vector<cplx>& path,
                       const TrackOptions& opt = {}, std::ostream* log = nullptr);

struct Rect {
    double re_min, re_max, im_min, im_max;
    std::array<cplx, 4> corners() const;  // ll, lr, ur, ul
    double diameter() const;
    cplx center() const { return {(re_min + re_max) / 2, (im_min + im_max) / 2}; }
};

struct Monodromy {
    Rect loop;
    // permutation[i]: canonical slot reached by the branch starting at slot i (0-based).
    std::vector<int> permutation;
    double min_gap_seen = 0;
    long steps_used = 0;
    // Zeros of prod_{i<j} (E_i - E_j)^2 enclosed, with multiplicity.
    int winding = 0;

    bool is_identity() const;
    bool is_transposition() const;
    int moved() const;
};

// Counterclockwise from the lower-left corner. Throws StepUnderflow when an
// EP lies on the perimeter.
Monodromy monodromy(const HamiltonianFamily& f, const Rect& rect, const TrackOptions& opt = {});

// Low-level segment tracker shared by trace_path and the scan grid.
struct SegmentResult {
    std::vector<cplx> end;   // by branch
    std::vector<int> slot;   // branch -> index into end_known (when given)
    long steps = 0;
    double min_gap = 0;
    double pair_phase = 0;
};

class SegmentTracker {
public:
    SegmentTracker(const HamiltonianFamily& f, TrackOptions opt);
    // start: values by branch at a. end_known (canonical values at b) ends the
    // path on exactly those numbers and fills slot.
    SegmentResult track(cplx a, cplx b, const std::vector<cplx>& start,
                        const std::vector<cplx>* end_known, double path_length_for_floor,
                        std::ostream* log = nullptr, std::vector<int>* log_labels = nullptr);
    std::vector<cplx> eval(cplx lambda) { return ev_(lambda); }
    long eigensolves() const { return ev_.count(); }

private:
    SpectrumEvaluator ev_;
    TrackOptions opt_;
    double step_hint_ = 0;
};

double min_pair_gap(const std::vector<cplx>& e);
std::vector<double> nearest_gaps(const std::vector<cplx>& e);

}  // namespace epqpt
