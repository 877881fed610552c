#pragma once

#include "epqpt/epfinder.hpp"
#include "epqpt/spinmodels.hpp"

#include <vector>

namespace epqpt {

struct ScalingPoint {
    int N = 0;
    double re = 0;
    double im = 0;          // Im lambda_1^ep > 0
    bool extended = false;  // located in extended precision
};

struct FirstOrderFit {
    double eta = 0, zeta = 0, intercept = 0, R2 = 0;
    std::vector<int> used_N, dropped_N;
};

// ln Im = -eta N - zeta ln N + intercept. Points below 1e-12 that were not
// located in extended precision are dropped.
FirstOrderFit fit_first_order(const std::vector<ScalingPoint>& pts);

struct KappaFit {
    std::vector<std::pair<int, int>> intervals;
    std::vector<double> kappa;  // -dln Im / dln N per interval
    double tail = 0;            // -slope of the log-log line through the last three points
    double tail_R2 = 0;
    bool increasing = false;    // strictly monotone
    bool decreasing = false;
};
KappaFit fit_kappa(const std::vector<ScalingPoint>& pts);

struct NearestScalingOptions {
    double extended_below = 1e-12;  // Im threshold that triggers extended precision
    unsigned digits = 50;
    NearestSearchOptions search;    // qpt2 and custom models
};

// qpt1 / qpt1p: Newton from the lowest pair at the critical point; qpt2:
// best-first search around lambda = 1.
ScalingPoint nearest_ep_point(Model m, const ModelParams& p, const NearestScalingOptions& opt = {});
std::vector<ScalingPoint> nearest_ep_points(Model m, const ModelParams& base, const std::vector<int>& Ns,
                                            const NearestScalingOptions& opt = {}, int threads = 1);

struct GapPoint {
    int N = 0;
    double lambda = 0;   // location of the minimal gap
    double gap = 0;      // E_2 - E_1
    double ratio = 0;    // gap / (2 Im lambda_1)
    bool extended = false;
    bool dropped = false;
};

// Minimal E_2 - E_1 on [center - w, center + w]; extended precision below
// 1e-13 * scale when allowed, otherwise the point is flagged as dropped.
GapPoint minimal_gap(const HamiltonianFamily& f, double center, double halfwidth, bool allow_extended = true,
                     unsigned digits = 50);

struct EdifResult {
    std::vector<GapPoint> gaps;
    FirstOrderFit gap_fit;
    FirstOrderFit im_fit;
    double eta_rel_diff = 0;  // |eta_gap - eta_im| / eta_im
};
EdifResult edif_consistency(Model m, const ModelParams& base, const std::vector<ScalingPoint>& eps,
                            bool allow_extended = true);

struct PowerLaw {
    double exponent = 0;  // y ~ N^{-exponent}
    double R2 = 0;
};
PowerLaw power_law_fit(const std::vector<int>& N, const std::vector<double>& y);

// E_2 - E_1 at fixed lambda for each N, with its power-law exponent.
PowerLaw gap_exponent_at(Model m, const ModelParams& base, const std::vector<int>& Ns, double lambda,
                         std::vector<double>* gaps = nullptr);

}  // namespace epqpt
