#include "epqpt/epfinder.hpp"

#include <algorithm>
#include <cmath>

namespace epqpt {

namespace {

using xp::XComplex;
using xp::XReal;

XComplex unit_root(int k, int n) {
    XReal ang = 2 * boost::math::constants::pi<XReal>() * XReal(k) / XReal(n);
    return XComplex(boost::multiprecision::cos(ang), boost::multiprecision::sin(ang));
}

// Coefficients a[0..d] of det(H - E) in E, by a DFT over E on a circle.
std::vector<XComplex> charpoly(const xp::Dense<XComplex>& H, const XReal& rho) {
    const int d = H.n, n = d + 1;
    std::vector<XComplex> vals(n);
    for (int l = 0; l < n; ++l) {
        XComplex E = rho * unit_root(l, n);
        xp::Dense<XComplex> A = H;
        for (int i = 0; i < d; ++i) A(i, i) -= E;
        vals[l] = xp::determinant(A);
    }
    std::vector<XComplex> a(n);
    for (int k = 0; k < n; ++k) {
        XComplex s(0);
        for (int l = 0; l < n; ++l) s += vals[l] * unit_root((n - (k * l) % n) % n, n);
        a[k] = s / (XReal(n) * boost::multiprecision::pow(rho, k));
    }
    return a;
}

// Sylvester resultant of p (degree d) and p' (degree d-1).
XComplex resultant_with_derivative(const std::vector<XComplex>& a) {
    const int d = static_cast<int>(a.size()) - 1;
    std::vector<XComplex> b(d);
    for (int k = 1; k <= d; ++k) b[k - 1] = a[k] * XReal(k);
    const int n = 2 * d - 1;
    xp::Dense<XComplex> S(n);
    for (int r = 0; r < d - 1; ++r)
        for (int k = 0; k <= d; ++k) S(r, r + k) = a[d - k];
    for (int r = 0; r < d; ++r)
        for (int k = 0; k <= d - 1; ++k) S(d - 1 + r, r + k) = b[d - 1 - k];
    return xp::determinant(S);
}

}  // namespace

OracleResult discriminant_eps(const HamiltonianFamily& f, int precision_digits, int d_oracle_max) {
    const int d = f.dim();
    if (d < 2) throw InputError("discriminant_eps: d >= 2 required");
    if (d > d_oracle_max) throw InputError("discriminant_eps: d exceeds d_oracle_max");
    if (precision_digits < 30) throw InputError("discriminant_eps: precision_digits must be >= 30");
    xp::PrecisionScope ps(static_cast<unsigned>(precision_digits));
    XFamily x = to_extended(f);

    const int M = d * (d - 1) + 1;
    const XReal rho_lambda(1);
    XReal rho_E(1);
    {
        double nrm = 0;
        for (int i = 0; i < d; ++i) nrm = std::max(nrm, (f.H0.row(i).cwiseAbs() + f.V.row(i).cwiseAbs()).sum());
        rho_E = XReal(std::max(1.0, nrm));
    }
    std::vector<XComplex> Dvals(M);
    for (int m = 0; m < M; ++m) {
        XComplex lam = rho_lambda * unit_root(m, M);
        xp::Dense<XComplex> H(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) H(i, k) = XComplex(x.H0(i, k)) + lam * x.V(i, k);
        Dvals[m] = resultant_with_derivative(charpoly(H, rho_E));
    }
    std::vector<XComplex> coef(M);
    XReal cmax(0);
    for (int k = 0; k < M; ++k) {
        XComplex s(0);
        for (int m = 0; m < M; ++m) s += Dvals[m] * unit_root((M - (k * m) % M) % M, M);
        s /= XReal(M) * boost::multiprecision::pow(rho_lambda, k);
        coef[k] = XComplex(s.real(), XReal(0));  // real up to rounding
        cmax = std::max(cmax, xp::cabs(s));
    }
    const XReal drop = boost::multiprecision::pow(XReal(10), -(precision_digits - 25)) * cmax;
    int deg = M - 1;
    while (deg > 0 && xp::cabs(coef[deg]) <= drop) --deg;
    coef.resize(deg + 1);

    OracleResult out;
    out.degree = deg;
    out.precision_digits = precision_digits;
    if (deg == 0) return out;
    xp::AberthInfo info;
    auto roots = xp::aberth_roots(coef, &info);
    if (!info.converged) throw NumericalError("discriminant_eps: root isolation failed; raise precision_digits");

    const XReal cluster_rel = boost::multiprecision::pow(XReal(10), -precision_digits / 4);
    std::vector<bool> used(roots.size(), false);
    struct Cluster {
        XComplex z;
        int mult;
    };
    std::vector<Cluster> clusters;
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        XComplex sum = roots[i];
        int mult = 1;
        used[i] = true;
        for (size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            if (xp::cabs(roots[j] - roots[i]) <= cluster_rel * (1 + xp::cabs(roots[i]))) {
                used[j] = true;
                sum += roots[j];
                ++mult;
            }
        }
        clusters.push_back({sum / XReal(mult), mult});
    }

    const double scale = f.scale();
    for (auto& c : clusters) {
        XReal im = c.z.imag();
        XReal mag = 1 + xp::cabs(c.z);
        cplx zd(c.z.real().convert_to<double>(), im.convert_to<double>());
        if (boost::multiprecision::abs(im) <= cluster_rel * mag) {
            out.real_roots.push_back(cplx(zd.real(), 0));
            continue;
        }
        if (im < 0) continue;
        ExceptionalPoint ep;
        ep.lambda = zd;
        ep.method = "discriminant";
        ep.multiplicity = c.mult;
        xp::Dense<XComplex> H(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) H(i, k) = XComplex(x.H0(i, k)) + c.z * x.V(i, k);
        auto ev = xp::hessenberg_qr_eigenvalues(H, 400);
        XReal g = -1;
        XComplex mid;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                XReal t = xp::cabs(ev[i] - ev[j]);
                if (g < 0 || t < g) g = t, mid = (ev[i] + ev[j]) / XReal(2);
            }
        ep.residual = g.convert_to<double>();
        ep.energy = cplx(mid.real().convert_to<double>(), mid.imag().convert_to<double>());
        if (c.mult == 1) out.max_residual = std::max(out.max_residual, ep.residual);
        out.eps.push_back(ep);
    }
    if (out.max_residual > 1e-10 * scale)
        throw NumericalError("discriminant_eps: residual check failed; raise precision_digits");
    sort_eps(out.eps);
    std::sort(out.real_roots.begin(), out.real_roots.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
    return out;
}

}  // namespace epqpt
