#include "epqpt/semiclassics.hpp"

#include "epqpt/stats.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace epqpt {

double quartic_level(int n, int d, double omega) {
    if (n < 1 || n > d) throw InputError("quartic_level requires 1 <= n <= d");
    return omega * std::pow(static_cast<double>(n), 4.0 / 3.0) * std::pow(static_cast<double>(d), -1.0 / 3.0);
}

QuarticFit fit_quartic_scale(const std::vector<double>& spectrum, QuarticReading reading, int n_lo, int n_hi) {
    const int d = static_cast<int>(spectrum.size());
    if (n_hi <= 0) n_hi = d / 4;
    if (d < 24 || n_hi < n_lo) throw InputError("fit_quartic_scale: fit window is empty (need d >= 24)");
    auto ref = [&](int n) {
        double k = reading == QuarticReading::excitation ? n - 1 : n;
        return std::pow(k, 4.0 / 3.0) * std::pow(static_cast<double>(d), -1.0 / 3.0);
    };
    auto val = [&](int n) { return reading == QuarticReading::excitation ? spectrum[n - 1] - spectrum[0] : spectrum[n - 1]; };
    double sxy = 0, sxx = 0;
    for (int n = n_lo; n <= n_hi; ++n) sxy += ref(n) * val(n), sxx += ref(n) * ref(n);
    QuarticFit fit;
    fit.omega = sxy / sxx;
    fit.d = d;
    fit.n_lo = n_lo;
    fit.n_hi = n_hi;
    fit.reading = reading;
    fit.rel_dev.resize(d);
    for (int n = 1; n <= d; ++n) {
        double r = fit.omega * ref(n);
        fit.rel_dev[n - 1] = r != 0 ? (val(n) - r) / r : std::numeric_limits<double>::quiet_NaN();
        if (n >= n_lo && n <= n_hi) fit.max_dev_window = std::max(fit.max_dev_window, std::abs(fit.rel_dev[n - 1]));
    }
    return fit;
}

CriticalLevels critical_levels(const HamiltonianFamily& f, double lambda, int count, bool extended, unsigned digits) {
    const int d = f.dim();
    if (count < 2 || count > d) throw InputError("critical_levels: count out of range");
    CriticalLevels out;
    out.N = f.params.N;
    out.extended = extended;
    if (!extended) {
        Eigen::SelfAdjointEigenSolver<RMat> es(f.H0 + lambda * f.V, Eigen::EigenvaluesOnly);
        for (int k = 0; k + 1 < count; ++k) out.gaps.push_back(es.eigenvalues()(k + 1) - es.eigenvalues()(k));
        return out;
    }
    xp::PrecisionScope ps(digits);
    XFamily x = to_extended(f);
    xp::Dense<xp::XReal> H(d);
    xp::XReal l(lambda);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) H(i, k) = x.H0(i, k) + l * x.V(i, k);
    auto w = xp::jacobi_eigh(H);
    for (int k = 0; k + 1 < count; ++k) out.gaps.push_back(static_cast<double>(w[k + 1] - w[k]));
    return out;
}

std::vector<DoubletFit> fit_doublet_splittings(const std::vector<CriticalLevels>& spectra, int doublets,
                                               double floor) {
    if (spectra.size() < 5) throw InputError("fit_doublet_splittings: need at least 5 values of N");
    std::vector<DoubletFit> out;
    for (int k = 0; k < doublets; ++k) {
        DoubletFit df;
        df.n = 2 * k + 1;
        std::vector<double> ds, ys;
        for (const auto& s : spectra) {
            if (static_cast<int>(s.gaps.size()) < df.n) continue;
            double g = s.gaps[df.n - 1];
            if (!(g > 0) || (!s.extended && g < floor)) {
                df.dropped_N.push_back(s.N);
                continue;
            }
            df.used_N.push_back(s.N);
            ds.push_back(s.N + 1);
            ys.push_back(std::log(g));
        }
        if (ds.size() < 3) continue;
        const int m = static_cast<int>(ds.size());
        RMat X(m, 3);
        RVec y(m);
        for (int i = 0; i < m; ++i) {
            X(i, 0) = -ds[i];
            X(i, 1) = -std::log(ds[i]);
            X(i, 2) = 1.0;
            y(i) = ys[i];
        }
        auto fit = least_squares(X, y);
        df.B = fit.coef(0);
        df.C = fit.coef(1);
        df.A = std::exp(fit.coef(2));
        df.R2 = fit.R2;
        out.push_back(df);
    }
    return out;
}

double doublewell_omega(const CriticalLevels& s) {
    if (s.gaps.size() < 4) throw InputError("doublewell_omega: need the first 5 levels");
    // even n in 1-based level numbering: E3-E2 and E5-E4
    return 0.5 * (s.gaps[1] + s.gaps[3]);
}

}  // namespace epqpt
