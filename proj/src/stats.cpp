#include "epqpt/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/SVD>

#include <cmath>

namespace epqpt {

LinFit least_squares(const RMat& X, const RVec& y, double max_condition) {
    if (X.rows() != y.size()) throw InputError("least_squares: size mismatch");
    if (X.rows() < X.cols()) throw InputError("least_squares: fewer points than parameters");
    // Column scaling so the condition number reflects collinearity, not units.
    RVec s = X.colwise().norm().transpose();
    for (int k = 0; k < s.size(); ++k)
        if (s(k) == 0) throw NumericalError("least_squares: zero regressor column");
    RMat Xs = X * s.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<RMat> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    if (!(cond <= max_condition)) throw NumericalError("least_squares: regressors are collinear; widen the data span");
    LinFit out;
    out.coef = s.cwiseInverse().asDiagonal() * svd.solve(y);
    out.condition = cond;
    out.residuals = y - X * out.coef;
    double mean = y.mean();
    double sst = (y.array() - mean).square().sum();
    double sse = out.residuals.squaredNorm();
    out.R2 = sst > 0 ? 1 - sse / sst : 1.0;
    return out;
}

double chi2_sf(double x, int dof) {
    if (dof <= 0) throw InputError("chi2_sf: dof must be positive");
    if (x <= 0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

MeanStat mean_stat(const std::vector<double>& x) {
    MeanStat m;
    m.n = static_cast<long>(x.size());
    if (x.empty()) return m;
    double s = 0;
    for (double v : x) s += v;
    m.mean = s / m.n;
    double ss = 0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.var = m.n > 1 ? ss / (m.n - 1) : 0;
    m.sem = m.n > 0 ? std::sqrt(m.var / m.n) : 0;
    return m;
}

HotellingResult hotelling_chi2(const std::vector<RVec>& per_sample, const RVec& expected) {
    const int k = static_cast<int>(expected.size());
    const long n = static_cast<long>(per_sample.size());
    if (n < k + 2) throw InputError("hotelling_chi2: too few samples");
    RVec mean = RVec::Zero(k);
    for (const auto& v : per_sample) mean += v;
    mean /= static_cast<double>(n);
    RMat S = RMat::Zero(k, k);
    for (const auto& v : per_sample) {
        RVec c = v - mean;
        S += c * c.transpose();
    }
    S /= static_cast<double>(n - 1);
    RVec diff = mean - expected;
    Eigen::LDLT<RMat> ldlt(S / static_cast<double>(n));
    if (ldlt.info() != Eigen::Success) throw NumericalError("hotelling_chi2: singular covariance");
    HotellingResult r;
    r.statistic = diff.dot(ldlt.solve(diff));
    r.dof = k;
    r.p_value = chi2_sf(r.statistic, k);
    return r;
}

}  // namespace epqpt
