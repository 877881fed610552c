#pragma once

#include "epqpt/epfinder.hpp"
#include "epqpt/stats.hpp"
#include "epqpt/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace epqpt {

enum class EnsembleKind { diag_rect, diag_norm, full, offd };

std::string to_string(EnsembleKind k);
EnsembleKind parse_ensemble_kind(const std::string& s);
bool is_diagonal(EnsembleKind k);

// Unperturbed spectra used as H0 = diag(E): critical qpt1 (a = 3), critical
// qpt2, and the harmonic ladder.
enum class ReferenceH0 { c1, c2, ho };

std::string to_string(ReferenceH0 h);
ReferenceH0 parse_reference_h0(const std::string& s);

struct ReferenceSpectrum {
    std::string name;
    std::vector<double> energies;  // ascending
    // spacings[k] = E_{k+2} - E_{k+1}; extended precision when double
    // precision resolves a spacing below 1e-13.
    std::vector<double> spacings;
    bool extended = false;

    int dim() const { return static_cast<int>(energies.size()); }
    // E_m - E_n for 0-based n < m, summed from spacings.
    double pair_gap(int n, int m) const;
    RMat matrix() const;
};

ReferenceSpectrum reference_spectrum(ReferenceH0 h, int d, double omega = 1.0, unsigned digits = 50);
ReferenceSpectrum spectrum_from_values(std::vector<double> e, const std::string& name = "custom");

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::full;
    int d = 2;
    double sigma = 1.0;
    uint64_t seed = 0;
    long samples = 1;
};

double quadratic_spread(const std::vector<cplx>& spectrum);
double quadratic_spread(const std::vector<double>& spectrum);
cplx spectral_mean(const std::vector<cplx>& spectrum);

// sigma^2 = D_E(0), D_E(0)/(d+2), D_E(0)/d for diag, full, offd.
double sigma_for(const std::vector<double>& h0_spectrum, EnsembleKind kind);
double sigma_for(const RMat& H0, EnsembleKind kind);

EnsembleSpec make_spec(EnsembleKind kind, const std::vector<double>& h0_spectrum, uint64_t seed, long samples);

// Sample `index` of the ensemble, drawn from the substream mix64(seed) ^ index.
RMat sample_perturbation(const EnsembleSpec& spec, uint64_t index);

struct SpreadCoefficients {
    double M_E0 = 0, D_E0 = 0;
    double M_V = 0, D_V = 0, K = 0, M_HV = 0;
    double lambda0 = 0, D_min = 0;
    // D_E(0) + K lambda + D_V lambda^2 for real lambda.
    double D_E(double lambda) const { return D_E0 + K * lambda + D_V * lambda * lambda; }
};
SpreadCoefficients spread_coefficients(const RMat& H0, const RMat& V);

struct MomentEntry {
    std::string name;
    MeanStat stat;
    double var_sem = 0;  // standard error of stat.var
    double predicted_mean = 0;
    double predicted_var = 0;
};

struct MomentStatistics {
    EnsembleKind kind = EnsembleKind::full;
    int d = 0;
    long samples = 0;
    double D_E0 = 0;
    double kappa = 0;  // diag kinds only
    MomentEntry M_V, D_V, K;
};

// H0 = diag(h0_spectrum). Leading-order predictions in d.
MomentStatistics moment_statistics(const EnsembleSpec& spec, const std::vector<double>& h0_spectrum,
                                   int threads = 0);

enum class SlopeDistribution { rect, normal };
SlopeDistribution slope_distribution(EnsembleKind k);  // diag kinds only

// rect: Theta(x-1) (x-1)/x^3; normal: sqrt(3/pi) x^-2 exp(-3/x^2).
double F_function(SlopeDistribution s, double x);
// Integral of F over [0, x]; tends to 1/2.
double G_function(SlopeDistribution s, double x);
// (2/x^2) int p(v) p(v - 2/x) dv, slopes v in units of V0 = sqrt(3) sigma,
// p supported on [lo, hi] (infinite bounds allowed).
double F_general(const std::function<double(double)>& p, double lo, double hi, double x, double tol = 1e-10);

struct CrossingCurve {
    std::vector<double> x, density;
    std::vector<std::pair<int, int>> near_degenerate;  // pairs with gap < 1e-13 (0-based)
};

// P(|lambda|) = (2/I) sum_{n<m} alpha F(alpha |lambda|), alpha = 2 V0 / gap.
CrossingCurve crossing_density_analytic(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma,
                                        const std::vector<double>& grid);
double crossing_cdf_analytic(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma, double L);
double crossing_quantile(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma, double q);

struct CrossingHistogram {
    std::vector<double> edges;
    std::vector<long> counts;  // |lambda| in [edges[k], edges[k+1])
    long overflow = 0;         // outside the edges
    long total = 0;
    long positive = 0;         // crossings at lambda > 0
    long samples = 0;
    std::vector<std::vector<int>> per_sample;  // filled when requested; last entry is overflow
};

// Exact crossings lambda = (E_m - E_n) / (V_nn - V_mm) of H0 + lambda V with
// diagonal V.
CrossingHistogram crossing_samples_diagonal(const ReferenceSpectrum& h0, const EnsembleSpec& spec,
                                            const std::vector<double>& edges, bool keep_per_sample = false,
                                            int threads = 0);

struct RadialHistogram {
    std::vector<double> edges;
    std::vector<long> counts;
    std::vector<double> density;  // unit integral over captured EPs
};

struct PlaneHistogram {
    std::vector<double> re_edges, im_edges;
    std::vector<long> counts;  // row-major, im index major
};

struct EpHistogramOptions {
    ScanRegion region{-3.0, 3.0, 1e-4, 3.0, 40, 0.0, true};
    ScanOptions scan;
    int radial_bins = 60;
    int re_bins = 60;
    int im_bins = 30;
    double failure_budget = 0.01;
    int threads = 0;
    long first_sample = 0;  // sample indices first_sample .. first_sample + samples - 1
    EpHistogramOptions() { scan.interior_probe = false; }
};

struct EpHistogramResult {
    EnsembleSpec spec;
    ScanRegion region;
    std::vector<std::vector<cplx>> per_sample;  // empty for failed samples
    std::vector<long> failed;                   // sample indices
    PlaneHistogram plane;
    RadialHistogram radial;
    long total_eps = 0;
    double captured_mass = 0;  // total_eps / (good samples * d(d-1)/2)
};

// Throws InputError for diagonal kinds; NumericalError when failures exceed the budget.
EpHistogramResult ep_histogram(const EnsembleSpec& spec, const ReferenceSpectrum& h0,
                               const EpHistogramOptions& opt = {});

struct NearestEpRow {
    int d = 0;
    long samples = 0;
    MeanStat abs_lambda;
    double lambda_thr = 0;  // smallest |lambda_1| in the sample
    std::vector<double> per_sample;
    std::vector<long> failed;
};

struct NearestEpStats {
    EnsembleKind kind = EnsembleKind::full;
    std::string h0;
    std::vector<NearestEpRow> rows;
    double mean_exponent = 0, mean_R2 = 0;  // ln <|lambda_1|> = a + b ln d
    double thr_exponent = 0, thr_R2 = 0;
};

// Per d the stream seed is seed ^ (d << 40) and sample i uses substream i.
NearestEpStats nearest_ep_stats(EnsembleKind kind, ReferenceH0 h0, const std::vector<int>& d_list, long samples,
                                uint64_t seed, const NearestSearchOptions& opt = {}, int threads = 0,
                                double failure_budget = 0.01);

// Single-sample nearest EP to lambda = 0 (nullopt if none found).
std::optional<ExceptionalPoint> sample_nearest_ep(const EnsembleSpec& spec, const ReferenceSpectrum& h0,
                                                  uint64_t index, const NearestSearchOptions& opt);

}  // namespace epqpt
