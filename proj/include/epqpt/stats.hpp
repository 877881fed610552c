#pragma once

#include "epqpt/types.hpp"

#include <vector>

namespace epqpt {

struct LinFit {
    RVec coef;
    double R2 = 0;
    double condition = 0;
    RVec residuals;
};

// Ordinary least squares of y on the columns of X. Throws NumericalError
// when X is numerically rank deficient (condition > max_condition).
LinFit least_squares(const RMat& X, const RVec& y, double max_condition = 1e12);

// Upper tail of the chi-square distribution.
double chi2_sf(double x, int dof);

struct MeanStat {
    double mean = 0;
    double var = 0;   // unbiased sample variance
    double sem = 0;   // standard error of the mean
    long n = 0;
};
MeanStat mean_stat(const std::vector<double>& x);

// (m - e)^T (S/n)^{-1} (m - e) with S the sample covariance of per-sample
// vectors; chi-square with dim(m) degrees of freedom for large n.
struct HotellingResult {
    double statistic = 0;
    int dof = 0;
    double p_value = 0;
};
HotellingResult hotelling_chi2(const std::vector<RVec>& per_sample, const RVec& expected);

}  // namespace epqpt
