#include "epqpt/ensembles.hpp"

#include "epqpt/parallel.hpp"
#include "epqpt/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace epqpt {

std::string to_string(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::diag_rect: return "diag-rect";
        case EnsembleKind::diag_norm: return "diag-norm";
        case EnsembleKind::full: return "full";
        case EnsembleKind::offd: return "offd";
    }
    return "?";
}

EnsembleKind parse_ensemble_kind(const std::string& s) {
    if (s == "diag-rect") return EnsembleKind::diag_rect;
    if (s == "diag-norm") return EnsembleKind::diag_norm;
    if (s == "full") return EnsembleKind::full;
    if (s == "offd") return EnsembleKind::offd;
    throw InputError("unknown ensemble kind '" + s + "' (diag-rect, diag-norm, full, offd)");
}

bool is_diagonal(EnsembleKind k) { return k == EnsembleKind::diag_rect || k == EnsembleKind::diag_norm; }

std::string to_string(ReferenceH0 h) {
    switch (h) {
        case ReferenceH0::c1: return "c1";
        case ReferenceH0::c2: return "c2";
        case ReferenceH0::ho: return "ho";
    }
    return "?";
}

ReferenceH0 parse_reference_h0(const std::string& s) {
    if (s == "c1") return ReferenceH0::c1;
    if (s == "c2") return ReferenceH0::c2;
    if (s == "ho") return ReferenceH0::ho;
    throw InputError("unknown H0 '" + s + "' (c1, c2, ho)");
}

double ReferenceSpectrum::pair_gap(int n, int m) const {
    double s = 0;
    for (int k = n; k < m; ++k) s += spacings[k];
    return s;
}

RMat ReferenceSpectrum::matrix() const {
    RVec e = Eigen::Map<const RVec>(energies.data(), dim());
    return e.asDiagonal();
}

ReferenceSpectrum spectrum_from_values(std::vector<double> e, const std::string& name) {
    if (e.size() < 2) throw InputError("reference spectrum needs d >= 2");
    std::sort(e.begin(), e.end());
    ReferenceSpectrum r;
    r.name = name;
    r.energies = std::move(e);
    for (size_t k = 0; k + 1 < r.energies.size(); ++k) r.spacings.push_back(r.energies[k + 1] - r.energies[k]);
    return r;
}

ReferenceSpectrum reference_spectrum(ReferenceH0 h, int d, double omega, unsigned digits) {
    if (d < 2) throw InputError("reference_spectrum: d >= 2 required");
    if (h == ReferenceH0::ho) {
        std::vector<double> e(d);
        for (int n = 0; n < d; ++n) e[n] = omega * (n + 1);
        return spectrum_from_values(std::move(e), "ho");
    }
    HamiltonianFamily f = h == ReferenceH0::c1 ? family_qpt1(d - 1, 3.0) : family_qpt2(d - 1);
    const double lc = *f.critical_lambda;
    Eigen::SelfAdjointEigenSolver<RMat> es(f.H0 + lc * f.V, Eigen::EigenvaluesOnly);
    std::vector<double> e(es.eigenvalues().data(), es.eigenvalues().data() + d);
    ReferenceSpectrum r = spectrum_from_values(e, to_string(h));
    if (*std::min_element(r.spacings.begin(), r.spacings.end()) >= 1e-13) return r;
    // Doublet splittings are rounding noise in double precision.
    xp::PrecisionScope ps(digits);
    XFamily x = to_extended(f);
    xp::Dense<xp::XReal> H(d);
    xp::XReal l(lc);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) H(i, k) = x.H0(i, k) + l * x.V(i, k);
    auto w = xp::jacobi_eigh(H);
    for (int k = 0; k < d; ++k) r.energies[k] = static_cast<double>(w[k]);
    for (int k = 0; k + 1 < d; ++k) r.spacings[k] = static_cast<double>(w[k + 1] - w[k]);
    r.extended = true;
    return r;
}

double quadratic_spread(const std::vector<cplx>& s) {
    if (s.size() < 2) throw InputError("quadratic_spread: d >= 2 required");
    cplx m = spectral_mean(s);
    double acc = 0;
    for (const auto& e : s) acc += std::norm(e - m);
    return acc / static_cast<double>(s.size() - 1);
}

double quadratic_spread(const std::vector<double>& s) {
    std::vector<cplx> c(s.begin(), s.end());
    return quadratic_spread(c);
}

cplx spectral_mean(const std::vector<cplx>& s) {
    if (s.empty()) throw InputError("spectral_mean: empty spectrum");
    cplx acc = 0;
    for (const auto& e : s) acc += e;
    return acc / static_cast<double>(s.size());
}

double sigma_for(const std::vector<double>& h0, EnsembleKind kind) {
    const double D = quadratic_spread(h0);
    const double d = static_cast<double>(h0.size());
    if (!(D > 0)) throw InputError("sigma_for: H0 spectrum has zero spread");
    switch (kind) {
        case EnsembleKind::diag_rect:
        case EnsembleKind::diag_norm: return std::sqrt(D);
        case EnsembleKind::full: return std::sqrt(D / (d + 2));
        case EnsembleKind::offd: return std::sqrt(D / d);
    }
    return 0;
}

double sigma_for(const RMat& H0, EnsembleKind kind) {
    if ((H0 - H0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H0.cwiseAbs().maxCoeff()))
        throw InputError("sigma_for: H0 must be real symmetric");
    Eigen::SelfAdjointEigenSolver<RMat> es(H0, Eigen::EigenvaluesOnly);
    std::vector<double> e(es.eigenvalues().data(), es.eigenvalues().data() + H0.rows());
    return sigma_for(e, kind);
}

EnsembleSpec make_spec(EnsembleKind kind, const std::vector<double>& h0, uint64_t seed, long samples) {
    EnsembleSpec s;
    s.kind = kind;
    s.d = static_cast<int>(h0.size());
    s.sigma = sigma_for(h0, kind);
    s.seed = seed;
    s.samples = samples;
    return s;
}

RMat sample_perturbation(const EnsembleSpec& spec, uint64_t index) {
    if (spec.d < 1 || !(spec.sigma > 0)) throw InputError("sample_perturbation: invalid spec");
    const int d = spec.d;
    const double s = spec.sigma;
    CounterRng rng(spec.seed, index);
    RMat V = RMat::Zero(d, d);
    switch (spec.kind) {
        case EnsembleKind::diag_rect:
            for (int i = 0; i < d; ++i) V(i, i) = std::sqrt(3.0) * s * (2.0 * rng.uniform() - 1.0);
            break;
        case EnsembleKind::diag_norm:
            for (int i = 0; i < d; ++i) V(i, i) = s * rng.normal();
            break;
        case EnsembleKind::full:
        case EnsembleKind::offd: {
            const bool diag = spec.kind == EnsembleKind::full;
            for (int i = 0; i < d; ++i)
                for (int k = i; k < d; ++k) {
                    if (i == k) {
                        if (diag) V(i, i) = std::sqrt(2.0) * s * rng.normal();
                        continue;
                    }
                    V(i, k) = V(k, i) = s * rng.normal();
                }
            break;
        }
    }
    return V;
}

SpreadCoefficients spread_coefficients(const RMat& H0, const RMat& V) {
    const int d = static_cast<int>(H0.rows());
    if (d < 2 || V.rows() != d || V.cols() != d || H0.cols() != d)
        throw InputError("spread_coefficients: H0 and V must be d x d with d >= 2");
    const double dd = d;
    SpreadCoefficients c;
    const double trH = H0.trace(), trV = V.trace();
    c.M_E0 = trH / dd;
    c.D_E0 = H0.squaredNorm() / (dd - 1) - trH * trH / (dd * (dd - 1));
    c.M_V = trV / dd;
    c.D_V = V.squaredNorm() / (dd - 1) - trV * trV / (dd * (dd - 1));
    c.M_HV = (H0.transpose().cwiseProduct(V)).sum() / dd;
    c.K = 2 * dd / (dd - 1) * (c.M_HV - c.M_E0 * c.M_V);
    if (c.D_V > 0) {
        c.lambda0 = -c.K / (2 * c.D_V);
        c.D_min = c.D_E0 - c.K * c.K / (4 * c.D_V);
    } else {
        c.lambda0 = 0;
        c.D_min = c.D_E0;
    }
    return c;
}

namespace {

MomentEntry summarize(const std::string& name, const std::vector<double>& x, double pm, double pv) {
    MomentEntry e;
    e.name = name;
    e.stat = mean_stat(x);
    double m4 = 0;
    for (double v : x) m4 += std::pow(v - e.stat.mean, 4);
    m4 /= static_cast<double>(x.size());
    e.var_sem = std::sqrt(std::max(0.0, m4 - e.stat.var * e.stat.var) / static_cast<double>(x.size()));
    e.predicted_mean = pm;
    e.predicted_var = pv;
    return e;
}

}  // namespace

MomentStatistics moment_statistics(const EnsembleSpec& spec, const std::vector<double>& h0, int threads) {
    const int d = static_cast<int>(h0.size());
    if (d != spec.d) throw InputError("moment_statistics: spec.d does not match H0");
    if (spec.samples < 2) throw InputError("moment_statistics: need at least 2 samples");
    RVec e = Eigen::Map<const RVec>(h0.data(), d);
    RMat H0 = e.asDiagonal();
    const long n = spec.samples;
    std::vector<double> mv(n), dv(n), kk(n);
    parallel_for(n, threads, [&](long i) {
        RMat V = sample_perturbation(spec, static_cast<uint64_t>(i));
        auto c = spread_coefficients(H0, V);
        mv[i] = c.M_V;
        dv[i] = c.D_V;
        kk[i] = c.K;
    });
    MomentStatistics m;
    m.kind = spec.kind;
    m.d = d;
    m.samples = n;
    m.D_E0 = quadratic_spread(h0);
    const double D = m.D_E0, dd = d;
    double vM = 0, vD = 0, vK = 0;
    switch (spec.kind) {
        case EnsembleKind::diag_rect:
        case EnsembleKind::diag_norm:
            m.kappa = spec.kind == EnsembleKind::diag_norm ? 2.0 : 0.8;
            vM = D / dd;
            vD = m.kappa * D * D / dd;
            vK = 4 * D * D / dd;
            break;
        case EnsembleKind::full:
            vM = 2 * D / (dd * dd);
            vD = D * D;
            vK = 8 * D * D / (dd * dd);
            break;
        case EnsembleKind::offd:
            vM = 0;
            vD = 2 * D * D / (dd * dd);
            vK = 0;
            break;
    }
    m.M_V = summarize("M_V", mv, 0.0, vM);
    m.D_V = summarize("D_V", dv, D, vD);
    m.K = summarize("K", kk, 0.0, vK);
    return m;
}

SlopeDistribution slope_distribution(EnsembleKind k) {
    if (k == EnsembleKind::diag_rect) return SlopeDistribution::rect;
    if (k == EnsembleKind::diag_norm) return SlopeDistribution::normal;
    throw InputError("slope_distribution: only diagonal ensembles have a closed-form crossing law");
}

double F_function(SlopeDistribution s, double x) {
    if (!(x > 0)) return 0;
    if (s == SlopeDistribution::rect) return x > 1 ? (x - 1) / (x * x * x) : 0.0;
    return std::sqrt(3.0 / std::numbers::pi) / (x * x) * std::exp(-3.0 / (x * x));
}

double G_function(SlopeDistribution s, double x) {
    if (!(x > 0)) return 0;
    if (s == SlopeDistribution::rect) return x > 1 ? (x - 1) * (x - 1) / (2 * x * x) : 0.0;
    return 0.5 * std::erfc(std::sqrt(3.0) / x);
}

double F_general(const std::function<double(double)>& p, double lo, double hi, double x, double tol) {
    if (!(x > 0)) return 0;
    const double u = 2.0 / x;
    // Support of p(v) p(v - u) is [lo, hi] intersected with [lo + u, hi + u].
    const double a = std::max(lo, lo + u), b = std::min(hi, hi + u);
    if (!(a < b)) return 0;
    double err = 0;
    auto g = [&](double v) { return p(v) * p(v - u); };
    double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 20, tol, &err);
    return 2.0 / (x * x) * val;
}

namespace {

struct PairTable {
    std::vector<double> alpha;
    std::vector<std::pair<int, int>> near;
};

PairTable pair_table(const ReferenceSpectrum& h0, double sigma) {
    const int d = h0.dim();
    const double V0 = std::sqrt(3.0) * sigma;
    PairTable t;
    for (int n = 0; n < d; ++n)
        for (int m = n + 1; m < d; ++m) {
            double g = h0.pair_gap(n, m);
            if (!(g > 0)) throw NumericalError("crossing density: degenerate H0 pair");
            if (g < 1e-13) t.near.emplace_back(n, m);
            t.alpha.push_back(2 * V0 / g);
        }
    return t;
}

}  // namespace

CrossingCurve crossing_density_analytic(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma,
                                        const std::vector<double>& grid) {
    auto t = pair_table(h0, sigma);
    const double I = static_cast<double>(t.alpha.size());
    CrossingCurve c;
    c.x = grid;
    c.near_degenerate = t.near;
    c.density.reserve(grid.size());
    for (double L : grid) {
        double acc = 0;
        for (double a : t.alpha) acc += a * F_function(s, a * L);
        c.density.push_back(2.0 / I * acc);
    }
    return c;
}

double crossing_cdf_analytic(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma, double L) {
    auto t = pair_table(h0, sigma);
    double acc = 0;
    for (double a : t.alpha) acc += 2 * G_function(s, a * L);
    return acc / static_cast<double>(t.alpha.size());
}

double crossing_quantile(const ReferenceSpectrum& h0, SlopeDistribution s, double sigma, double q) {
    if (!(q > 0 && q < 1)) throw InputError("crossing_quantile: q must lie in (0, 1)");
    double lo = 1e-300, hi = 1.0;
    while (crossing_cdf_analytic(h0, s, sigma, hi) < q) hi *= 2;
    // Bisection in log space; the CDF spans many decades for doublet spectra.
    for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);
        if (crossing_cdf_analytic(h0, s, sigma, mid) < q) lo = mid;
        else hi = mid;
        if (hi / lo - 1 < 1e-14) break;
    }
    return std::sqrt(lo * hi);
}

CrossingHistogram crossing_samples_diagonal(const ReferenceSpectrum& h0, const EnsembleSpec& spec,
                                            const std::vector<double>& edges, bool keep_per_sample, int threads) {
    if (!is_diagonal(spec.kind)) throw InputError("crossing_samples_diagonal: diagonal ensembles only");
    if (spec.d != h0.dim()) throw InputError("crossing_samples_diagonal: spec.d does not match H0");
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw InputError("crossing_samples_diagonal: need ascending bin edges");
    const int d = h0.dim();
    const int nb = static_cast<int>(edges.size()) - 1;
    const long n = spec.samples;
    std::vector<std::vector<int>> per(n, std::vector<int>(nb + 1, 0));
    std::vector<int> pos(n, 0);
    std::vector<double> gaps;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) gaps.push_back(h0.pair_gap(a, b));
    parallel_for(n, threads, [&](long i) {
        RMat V = sample_perturbation(spec, static_cast<uint64_t>(i));
        auto& row = per[i];
        int g = 0;
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b, ++g) {
                double dv = V(a, a) - V(b, b);
                if (dv == 0) {
                    ++row[nb];
                    continue;
                }
                double lam = gaps[g] / dv;
                if (lam > 0) ++pos[i];
                double L = std::abs(lam);
                auto it = std::upper_bound(edges.begin(), edges.end(), L);
                long k = static_cast<long>(it - edges.begin()) - 1;
                if (k < 0 || k >= nb) ++row[nb];
                else ++row[k];
            }
    });
    CrossingHistogram h;
    h.edges = edges;
    h.counts.assign(nb, 0);
    h.samples = n;
    for (long i = 0; i < n; ++i) {
        for (int k = 0; k < nb; ++k) h.counts[k] += per[i][k];
        h.overflow += per[i][nb];
        h.positive += pos[i];
    }
    h.total = n * static_cast<long>(gaps.size());
    if (keep_per_sample) h.per_sample = std::move(per);
    return h;
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n + 1);
    for (int k = 0; k <= n; ++k) v[k] = a + (b - a) * k / n;
    return v;
}

long bin_of(const std::vector<double>& edges, double x) {
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    long k = static_cast<long>(it - edges.begin()) - 1;
    if (k < 0 || k >= static_cast<long>(edges.size()) - 1) return -1;
    return k;
}

}  // namespace

EpHistogramResult ep_histogram(const EnsembleSpec& spec, const ReferenceSpectrum& h0, const EpHistogramOptions& opt) {
    if (is_diagonal(spec.kind))
        throw InputError("ep_histogram: diagonal ensembles have only real degeneracies");
    if (spec.d != h0.dim()) throw InputError("ep_histogram: spec.d does not match H0");
    const long n = spec.samples;
    const RMat H0 = h0.matrix();
    std::vector<std::vector<cplx>> per(n);
    std::vector<char> bad(n, 0);
    parallel_for(n, opt.threads, [&](long i) {
        try {
            uint64_t idx = static_cast<uint64_t>(opt.first_sample + i);
            auto f = family_custom(H0, sample_perturbation(spec, idx));
            auto r = scan_region(f, opt.region, opt.scan);
            if (!r.unresolved.empty()) {
                bad[i] = 1;
                return;
            }
            for (const auto& ep : r.eps) per[i].push_back(ep.lambda);
        } catch (const NumericalError&) {
            bad[i] = 1;
        }
    });
    EpHistogramResult out;
    out.spec = spec;
    out.region = opt.region;
    for (long i = 0; i < n; ++i)
        if (bad[i]) out.failed.push_back(opt.first_sample + i), per[i].clear();
    if (static_cast<double>(out.failed.size()) > opt.failure_budget * static_cast<double>(n))
        throw NumericalError("ep_histogram: " + std::to_string(out.failed.size()) + " of " + std::to_string(n) +
                             " sample scans failed (budget exceeded)");
    const auto& R = opt.region;
    double rmax = std::hypot(std::max(std::abs(R.re_min), std::abs(R.re_max)), R.im_max);
    out.radial.edges = linspace(0, rmax, opt.radial_bins);
    out.radial.counts.assign(opt.radial_bins, 0);
    out.plane.re_edges = linspace(R.re_min, R.re_max, opt.re_bins);
    out.plane.im_edges = linspace(0, R.im_max, opt.im_bins);
    out.plane.counts.assign(static_cast<size_t>(opt.re_bins) * opt.im_bins, 0);
    for (const auto& s : per)
        for (const auto& z : s) {
            ++out.total_eps;
            long kr = bin_of(out.radial.edges, std::abs(z));
            if (kr >= 0) ++out.radial.counts[kr];
            long kx = bin_of(out.plane.re_edges, z.real()), ky = bin_of(out.plane.im_edges, z.imag());
            if (kx >= 0 && ky >= 0) ++out.plane.counts[ky * opt.re_bins + kx];
        }
    out.radial.density.assign(opt.radial_bins, 0.0);
    if (out.total_eps > 0)
        for (int k = 0; k < opt.radial_bins; ++k)
            out.radial.density[k] = static_cast<double>(out.radial.counts[k]) /
                                    (static_cast<double>(out.total_eps) * (out.radial.edges[k + 1] - out.radial.edges[k]));
    const long good = n - static_cast<long>(out.failed.size());
    const double pairs = 0.5 * spec.d * (spec.d - 1);
    out.captured_mass = good > 0 ? static_cast<double>(out.total_eps) / (good * pairs) : 0.0;
    out.per_sample = std::move(per);
    return out;
}

std::optional<ExceptionalPoint> sample_nearest_ep(const EnsembleSpec& spec, const ReferenceSpectrum& h0,
                                                  uint64_t index, const NearestSearchOptions& opt) {
    auto f = family_custom(h0.matrix(), sample_perturbation(spec, index));
    return nearest_ep_search(f, 0.0, opt).ep;
}

NearestEpStats nearest_ep_stats(EnsembleKind kind, ReferenceH0 h0k, const std::vector<int>& d_list, long samples,
                                uint64_t seed, const NearestSearchOptions& opt, int threads, double failure_budget) {
    if (is_diagonal(kind)) throw InputError("nearest_ep_stats: diagonal ensembles have only real degeneracies");
    if (samples < 1) throw InputError("nearest_ep_stats: samples >= 1 required");
    NearestEpStats st;
    st.kind = kind;
    st.h0 = to_string(h0k);
    for (int d : d_list) {
        auto h0 = reference_spectrum(h0k, d);
        auto spec = make_spec(kind, h0.energies, seed ^ (static_cast<uint64_t>(d) << 40), samples);
        std::vector<double> val(samples, std::numeric_limits<double>::quiet_NaN());
        parallel_for(samples, threads, [&](long i) {
            try {
                auto ep = sample_nearest_ep(spec, h0, static_cast<uint64_t>(i), opt);
                if (ep) val[i] = std::abs(ep->lambda);
            } catch (const NumericalError&) {
            }
        });
        NearestEpRow row;
        row.d = d;
        row.samples = samples;
        std::vector<double> good;
        for (long i = 0; i < samples; ++i) {
            if (std::isnan(val[i])) row.failed.push_back(i);
            else good.push_back(val[i]);
        }
        if (static_cast<double>(row.failed.size()) > failure_budget * static_cast<double>(samples))
            throw NumericalError("nearest_ep_stats: failure budget exceeded at d = " + std::to_string(d));
        row.abs_lambda = mean_stat(good);
        row.lambda_thr = good.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : *std::min_element(good.begin(), good.end());
        row.per_sample = val;
        st.rows.push_back(std::move(row));
    }
    if (st.rows.size() >= 2) {
        const int m = static_cast<int>(st.rows.size());
        RMat X(m, 2);
        RVec ym(m), yt(m);
        for (int i = 0; i < m; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = std::log(static_cast<double>(st.rows[i].d));
            ym(i) = std::log(st.rows[i].abs_lambda.mean);
            yt(i) = std::log(st.rows[i].lambda_thr);
        }
        auto fm = least_squares(X, ym);
        auto ft = least_squares(X, yt);
        st.mean_exponent = fm.coef(1);
        st.mean_R2 = fm.R2;
        st.thr_exponent = ft.coef(1);
        st.thr_R2 = ft.R2;
    }
    return st;
}

}  // namespace epqpt
