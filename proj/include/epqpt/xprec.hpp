#pragma once

// Dense kernels templated on the real scalar, instantiated for double and
// for runtime-precision mpfr numbers. Eigen's decompositions cannot be
// instantiated on the mpfr type, so everything here is self-contained.

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace epqpt::xp {

using XReal = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                            boost::multiprecision::et_off>;
using XComplex = std::complex<XReal>;

// mpfr default precision is process-global in this Boost version: set it
// before spawning workers, never inside them.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned digits) : saved_(XReal::default_precision()) {
        XReal::default_precision(digits);
    }
    ~PrecisionScope() { XReal::default_precision(saved_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_;
};

template <class R>
struct Eps {
    static R get() { return std::numeric_limits<R>::epsilon(); }
};
template <>
struct Eps<XReal> {
    static XReal get() {
        return boost::multiprecision::pow(XReal(10), -static_cast<int>(XReal::default_precision()));
    }
};

template <class T>
struct Dense {
    int n = 0;
    std::vector<T> a;
    Dense() = default;
    explicit Dense(int n_) : n(n_), a(static_cast<size_t>(n_) * n_, T(0)) {}
    T& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    const T& operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

template <class R>
R cabs(const std::complex<R>& z) {
    using std::abs;
    using std::sqrt;
    R x = abs(z.real()), y = abs(z.imag());
    if (x < y) std::swap(x, y);
    if (x == 0) return R(0);
    R t = y / x;
    return x * sqrt(R(1) + t * t);
}

template <class R>
std::complex<R> csqrt(const std::complex<R>& z) {
    using std::abs;
    using std::sqrt;
    R r = cabs(z);
    if (r == 0) return {R(0), R(0)};
    R t = sqrt((r + abs(z.real())) / 2);
    if (z.real() >= 0) return {t, z.imag() / (2 * t)};
    R im = z.imag() < 0 ? -t : t;
    return {abs(z.imag()) / (2 * t), im};
}

template <class R>
std::complex<R> cconj(const std::complex<R>& z) {
    return {z.real(), -z.imag()};
}

template <class R>
R cnorm2(const std::complex<R>& z) {
    return z.real() * z.real() + z.imag() * z.imag();
}

// Cyclic Jacobi for real symmetric A. Eigenvalues ascending; if Q is given,
// its columns are the matching orthonormal eigenvectors.
template <class R>
std::vector<R> jacobi_eigh(Dense<R> A, Dense<R>* Q = nullptr, int max_sweeps = 100) {
    using std::abs;
    using std::sqrt;
    const int n = A.n;
    Dense<R> V(n);
    for (int i = 0; i < n; ++i) V(i, i) = R(1);
    const R eps = Eps<R>::get();
    R total(0);
    for (auto& v : A.a) total += v * v;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        R off(0);
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off <= eps * eps * total || off == 0) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                R apq = A(p, q);
                if (apq == 0) continue;
                R theta = (A(q, q) - A(p, p)) / (2 * apq);
                R t = R(1) / (abs(theta) + sqrt(theta * theta + 1));
                if (theta < 0) t = -t;
                R c = R(1) / sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < n; ++k) {
                    R akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    R apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    R vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps) throw std::runtime_error("jacobi_eigh: no convergence");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return A(x, x) < A(y, y); });
    std::vector<R> w(n);
    for (int i = 0; i < n; ++i) w[i] = A(idx[i], idx[i]);
    if (Q) {
        *Q = Dense<R>(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) (*Q)(k, i) = V(k, idx[i]);
    }
    return w;
}

// In-place partial-pivot LU solve. Returns false on an exactly zero pivot.
template <class C>
bool lu_solve(Dense<C> A, std::vector<C>& b) {
    const int n = A.n;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        auto best = cabs(A(k, k));
        for (int i = k + 1; i < n; ++i) {
            auto v = cabs(A(i, k));
            if (v > best) best = v, piv = i;
        }
        if (best == 0) return false;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (int i = k + 1; i < n; ++i) {
            C f = A(i, k) / A(k, k);
            if (f == C(0)) continue;
            for (int j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        C s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A(i, j) * b[j];
        b[i] = s / A(i, i);
    }
    return true;
}

template <class C>
C determinant(Dense<C> A) {
    const int n = A.n;
    C det(1);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        auto best = cabs(A(k, k));
        for (int i = k + 1; i < n; ++i) {
            auto v = cabs(A(i, k));
            if (v > best) best = v, piv = i;
        }
        if (best == 0) return C(0);
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            det = -det;
        }
        det *= A(k, k);
        for (int i = k + 1; i < n; ++i) {
            C f = A(i, k) / A(k, k);
            for (int j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
        }
    }
    return det;
}

// Householder reduction to Hessenberg form followed by single-shift complex
// QR with Wilkinson shifts. Eigenvalues only; no ordering contract.
template <class C>
std::vector<C> hessenberg_qr_eigenvalues(Dense<C> H, int max_iter_per_eig = 60) {
    using R = typename C::value_type;
    using std::sqrt;
    const int n = H.n;
    const R eps = Eps<R>::get();

    for (int k = 0; k + 2 < n; ++k) {
        R xnorm2(0);
        for (int i = k + 1; i < n; ++i) xnorm2 += cnorm2(H(i, k));
        if (xnorm2 == 0) continue;
        R xnorm = sqrt(xnorm2);
        C x0 = H(k + 1, k);
        R ax0 = cabs(x0);
        C phase = ax0 == 0 ? C(1) : x0 / ax0;
        C alpha = -phase * xnorm;
        std::vector<C> v(n, C(0));
        v[k + 1] = x0 - alpha;
        for (int i = k + 2; i < n; ++i) v[i] = H(i, k);
        R vn2(0);
        for (int i = k + 1; i < n; ++i) vn2 += cnorm2(v[i]);
        if (vn2 == 0) continue;
        // H <- (I - 2 v v^H / |v|^2) H (I - 2 v v^H / |v|^2)
        for (int j = 0; j < n; ++j) {
            C s(0);
            for (int i = k + 1; i < n; ++i) s += cconj(v[i]) * H(i, j);
            s *= R(2) / vn2;
            for (int i = k + 1; i < n; ++i) H(i, j) -= v[i] * s;
        }
        for (int i = 0; i < n; ++i) {
            C s(0);
            for (int j = k + 1; j < n; ++j) s += H(i, j) * v[j];
            s *= R(2) / vn2;
            for (int j = k + 1; j < n; ++j) H(i, j) -= s * cconj(v[j]);
        }
        for (int i = k + 2; i < n; ++i) H(i, k) = C(0);
    }

    std::vector<C> eig;
    eig.reserve(n);
    int hi = n - 1, iter = 0;
    std::vector<C> cs(n), ss(n);
    while (hi >= 0) {
        if (hi == 0) {
            eig.push_back(H(0, 0));
            break;
        }
        int l = hi;
        while (l > 0) {
            R sub = cabs(H(l, l - 1));
            R diag = cabs(H(l, l)) + cabs(H(l - 1, l - 1));
            if (sub <= eps * diag || sub == 0) break;
            --l;
        }
        if (l > 0) H(l, l - 1) = C(0);
        if (l == hi) {
            eig.push_back(H(hi, hi));
            --hi;
            iter = 0;
            continue;
        }
        if (++iter > max_iter_per_eig) throw std::runtime_error("hessenberg_qr: no convergence");

        C a = H(hi - 1, hi - 1), b = H(hi - 1, hi), c = H(hi, hi - 1), d = H(hi, hi);
        C shift;
        if (iter % 11 == 10) {
            shift = d + C(cabs(c) * R(0.75), 0);
        } else {
            C half = (a + d) / R(2);
            C disc = csqrt((a - d) * (a - d) / R(4) + b * c);
            C m1 = half + disc, m2 = half - disc;
            shift = cabs(m1 - d) < cabs(m2 - d) ? m1 : m2;
        }
        for (int k = l; k <= hi; ++k) H(k, k) -= shift;
        for (int k = l; k < hi; ++k) {
            C x = H(k, k), y = H(k + 1, k);
            R r = sqrt(cnorm2(x) + cnorm2(y));
            C cc = r == 0 ? C(1) : x / r;
            C sv = r == 0 ? C(0) : y / r;
            cs[k] = cc;
            ss[k] = sv;
            for (int j = k; j <= hi; ++j) {
                C hk = H(k, j), hk1 = H(k + 1, j);
                H(k, j) = cconj(cc) * hk + cconj(sv) * hk1;
                H(k + 1, j) = -sv * hk + cc * hk1;
            }
        }
        for (int k = l; k < hi; ++k) {
            C cc = cs[k], sv = ss[k];
            int top = std::min(k + 2, hi);
            for (int i = l; i <= top; ++i) {
                C hk = H(i, k), hk1 = H(i, k + 1);
                H(i, k) = cc * hk + sv * hk1;
                H(i, k + 1) = -cconj(sv) * hk + cconj(cc) * hk1;
            }
        }
        for (int k = l; k <= hi; ++k) H(k, k) += shift;
    }
    return eig;
}

// Coefficients c[0..n] of p(z) = sum c[k] z^k, c[n] != 0.
template <class C>
void horner(const std::vector<C>& c, const C& z, C& p, C& dp) {
    const int n = static_cast<int>(c.size()) - 1;
    p = c[n];
    dp = C(0);
    for (int k = n - 1; k >= 0; --k) {
        dp = dp * z + p;
        p = p * z + c[k];
    }
}

struct AberthInfo {
    int iterations = 0;
    bool converged = false;
};

// Aberth-Ehrlich simultaneous iteration. Multiple roots converge only
// linearly and to ~sqrt(eps), so iteration stops once every correction is
// below eps^loose_exponent, followed by polishing sweeps for simple roots.
template <class C>
std::vector<C> aberth_roots(const std::vector<C>& c, AberthInfo* info = nullptr, int max_iter = 20000,
                            double loose_exponent = 0.45, int polish_sweeps = 4) {
    using R = typename C::value_type;
    using std::cos;
    using std::pow;
    using std::sin;
    const int n = static_cast<int>(c.size()) - 1;
    if (n < 1) return {};
    const R eps = Eps<R>::get();
    const R loose = pow(eps, R(loose_exponent));
    R an = cabs(c[n]);
    R bound(0);
    for (int k = 0; k < n; ++k) {
        R t = cabs(c[k]) / an;
        if (t > bound) bound = t;
    }
    R rad = pow(cabs(c[0]) / an, R(1) / n);
    if (rad == 0 || rad > bound + 1) rad = (bound + 1) / 2;
    std::vector<C> z(n);
    const R two_pi = R(2) * boost::math::constants::pi<R>();
    for (int k = 0; k < n; ++k) {
        R ang = two_pi * (R(k) + R(0.25)) / R(n) + R(0.4);
        z[k] = C(rad * cos(ang), rad * sin(ang));
    }
    auto sweep = [&](std::vector<bool>* done) {
        bool all = true;
        for (int i = 0; i < n; ++i) {
            if (done && (*done)[i]) continue;
            C p, dp;
            horner(c, z[i], p, dp);
            if (p == C(0)) {
                if (done) (*done)[i] = true;
                continue;
            }
            C ratio = p / dp;
            C sum(0);
            for (int j = 0; j < n; ++j)
                if (j != i) sum += C(1) / (z[i] - z[j]);
            C w = ratio / (C(1) - ratio * sum);
            if (!(cabs(w) == cabs(w))) continue;
            z[i] -= w;
            R scale = cabs(z[i]) + R(1);
            if (cabs(w) <= loose * scale) {
                if (done) (*done)[i] = true;
            } else {
                all = false;
            }
        }
        return all;
    };
    std::vector<bool> done(n, false);
    int it = 0;
    bool ok = false;
    for (; it < max_iter; ++it) {
        if (sweep(&done)) {
            ok = true;
            break;
        }
    }
    for (int k = 0; k < polish_sweeps; ++k) sweep(nullptr);
    if (info) {
        info->iterations = it;
        info->converged = ok;
    }
    return z;
}

template <class R>
struct NewtonEpResult {
    std::complex<R> lambda;
    std::complex<R> energy;
    std::vector<std::complex<R>> x;
    int iterations = 0;
    bool converged = false;
};

// Newton on the bordered system (H0 + lambda V - E) x = 0, x^T x = 0, c^T x = 1
// with c = conj(x0)/|x0|^2. The Jacobian is nonsingular at a generic EP.
template <class R>
NewtonEpResult<R> newton_ep(const Dense<R>& H0, const Dense<R>& V, std::complex<R> lambda,
                            std::complex<R> E, std::vector<std::complex<R>> x, R tol,
                            int max_iter = 60) {
    using C = std::complex<R>;
    const int d = H0.n;
    R xn2(0);
    for (auto& v : x) xn2 += cnorm2(v);
    std::vector<C> cvec(d);
    for (int i = 0; i < d; ++i) cvec[i] = cconj(x[i]) / xn2;
    {
        C s(0);
        for (int i = 0; i < d; ++i) s += cvec[i] * x[i];
        for (auto& v : x) v /= s;
    }
    NewtonEpResult<R> out;
    R prev_step(-1);
    for (int it = 1; it <= max_iter; ++it) {
        Dense<C> J(d + 2);
        std::vector<C> F(d + 2), Vx(d, C(0));
        for (int i = 0; i < d; ++i) {
            C ax(0);
            for (int k = 0; k < d; ++k) {
                C aik = C(H0(i, k)) + lambda * V(i, k);
                if (i == k) aik -= E;
                J(i, k) = aik;
                ax += aik * x[k];
                Vx[i] += V(i, k) * x[k];
            }
            F[i] = -ax;
            J(i, d) = -x[i];
            J(i, d + 1) = Vx[i];
        }
        C xx(0), cx(0);
        for (int i = 0; i < d; ++i) {
            xx += x[i] * x[i];
            cx += cvec[i] * x[i];
            J(d, i) = R(2) * x[i];
            J(d + 1, i) = cvec[i];
        }
        F[d] = -xx;
        F[d + 1] = C(1) - cx;
        if (!lu_solve(J, F)) break;
        for (int i = 0; i < d; ++i) x[i] += F[i];
        E += F[d];
        lambda += F[d + 1];
        out.iterations = it;
        R step = cabs(F[d + 1]);
        R scale = R(1) + cabs(lambda);
        if (!(step == step)) break;  // NaN
        if (step <= tol * scale) {
            out.converged = true;
            break;
        }
        // Rounding floor: steps stop shrinking just above tol.
        if (it > 3 && step <= R(1e4) * tol * scale && step > prev_step / 2) {
            out.converged = true;
            break;
        }
        if (step > R(1e6) * scale) break;
        prev_step = step;
    }
    out.lambda = lambda;
    out.energy = E;
    out.x = std::move(x);
    return out;
}

}  // namespace epqpt::xp
