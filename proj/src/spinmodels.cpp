#include "epqpt/spinmodels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace epqpt {

namespace {

constexpr int kMaxN = 16384;

void check_N(int N) {
    if (N < 1) throw InputError("N must be >= 1");
    if (N > kMaxN) throw InputError("N too large for dense matrices (d would exceed 16385)");
}

RMat to_eigen(const xp::Dense<double>& A) {
    RMat M(A.n, A.n);
    for (int i = 0; i < A.n; ++i)
        for (int k = 0; k < A.n; ++k) M(i, k) = A(i, k);
    return M;
}

// Removes rounding asymmetry so H0, V are symmetric bit for bit.
void symmetrize(RMat& M) { M = 0.5 * (M + M.transpose()).eval(); }

}  // namespace

std::string to_string(Model m) {
    switch (m) {
        case Model::qpt1: return "qpt1";
        case Model::qpt2: return "qpt2";
        case Model::qpt1p: return "qpt1p";
        case Model::ho: return "ho";
        case Model::custom: return "custom";
    }
    return "custom";
}

Model parse_model(const std::string& s) {
    if (s == "qpt1") return Model::qpt1;
    if (s == "qpt2") return Model::qpt2;
    if (s == "qpt1p") return Model::qpt1p;
    if (s == "ho") return Model::ho;
    if (s == "custom") return Model::custom;
    throw InputError("unknown model '" + s + "'");
}

double HamiltonianFamily::scale() const {
    double s = 1.0;
    if (H0.size()) s = std::max(s, H0.cwiseAbs().maxCoeff());
    if (V.size()) s = std::max(s, V.cwiseAbs().maxCoeff());
    return s;
}

SpinOperators build_spin_ops(int N) {
    check_N(N);
    SpinOperators S;
    S.N = N;
    S.j = N / 2.0;
    S.d = N + 1;
    const int d = S.d;
    S.J3 = CMat::Zero(d, d);
    S.Jplus = CMat::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        double m = -S.j + k;
        S.J3(k, k) = m;
        if (k + 1 < d) S.Jplus(k + 1, k) = std::sqrt(S.j * (S.j + 1) - m * (m + 1));
    }
    S.Jminus = S.Jplus.adjoint();
    S.J1 = 0.5 * (S.Jplus + S.Jminus);
    S.J2 = cplx(0, -0.5) * (S.Jplus - S.Jminus);
    return S;
}

HamiltonianFamily family_qpt1(int N, double a) {
    check_N(N);
    if (!(a > 0.5)) throw InputError("qpt1 requires a > 1/2");
    ModelParams p;
    p.N = N;
    p.a = a;
    auto [h0, v] = build_model_matrices<double>(Model::qpt1, p);
    HamiltonianFamily f{to_eigen(h0), to_eigen(v), Model::qpt1, p, 0.0};
    symmetrize(f.H0);
    symmetrize(f.V);
    return f;
}

HamiltonianFamily family_qpt2(int N) {
    check_N(N);
    ModelParams p;
    p.N = N;
    auto [h0, v] = build_model_matrices<double>(Model::qpt2, p);
    HamiltonianFamily f{to_eigen(h0), to_eigen(v), Model::qpt2, p, 1.0};
    symmetrize(f.V);
    return f;
}

HamiltonianFamily family_qpt1p(int N, double c) {
    check_N(N);
    if (c == 0.0) throw InputError("qpt1p requires c != 0");
    ModelParams p;
    p.N = N;
    p.c = c;
    auto [h0, v] = build_model_matrices<double>(Model::qpt1p, p);
    HamiltonianFamily f{to_eigen(h0), to_eigen(v), Model::qpt1p, p, 1.0 / (1.0 + c * c)};
    symmetrize(f.V);
    return f;
}

HamiltonianFamily family_ho(int d, double omega) {
    if (d < 2) throw InputError("ho requires d >= 2");
    if (!(omega > 0)) throw InputError("ho requires omega > 0");
    ModelParams p;
    p.N = d - 1;
    p.omega = omega;
    RMat H0 = RMat::Zero(d, d);
    for (int n = 0; n < d; ++n) H0(n, n) = omega * (n + 1);
    return HamiltonianFamily{H0, RMat::Zero(d, d), Model::ho, p, std::nullopt};
}

HamiltonianFamily family_custom(RMat H0, RMat V) {
    if (H0.rows() != H0.cols() || V.rows() != V.cols() || H0.rows() != V.rows())
        throw InputError("custom family: H0 and V must be square of equal size");
    if (H0.rows() < 1) throw InputError("custom family: empty matrices");
    double tol = 1e-12 * std::max(1.0, std::max(H0.cwiseAbs().maxCoeff(), V.cwiseAbs().maxCoeff()));
    if ((H0 - H0.transpose()).cwiseAbs().maxCoeff() > tol || (V - V.transpose()).cwiseAbs().maxCoeff() > tol)
        throw InputError("custom family: matrices must be symmetric");
    ModelParams p;
    p.N = static_cast<int>(H0.rows()) - 1;
    return HamiltonianFamily{std::move(H0), std::move(V), Model::custom, p, std::nullopt};
}

HamiltonianFamily make_family(Model m, const ModelParams& p) {
    switch (m) {
        case Model::qpt1: return family_qpt1(p.N, p.a);
        case Model::qpt2: return family_qpt2(p.N);
        case Model::qpt1p: return family_qpt1p(p.N, p.c);
        case Model::ho: return family_ho(p.N + 1, p.omega);
        case Model::custom: break;
    }
    throw InputError("make_family: custom families need explicit matrices");
}

CMat evaluate_at(const HamiltonianFamily& f, cplx lambda) {
    CMat M;
    evaluate_into(f, lambda, M);
    return M;
}

void evaluate_into(const HamiltonianFamily& f, cplx lambda, CMat& out) {
    const int d = f.dim();
    out.resize(d, d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) out(i, k) = cplx(f.H0(i, k), 0.0) + lambda * f.V(i, k);
}

GroundStateValue ground_state_observable(const HamiltonianFamily& f, double lambda, Observable obs) {
    const int d = f.dim();
    RMat H = f.H0 + lambda * f.V;
    Eigen::SelfAdjointEigenSolver<RMat> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("ground_state_observable: eigensolver failed");
    RMat O;
    if (f.model == Model::custom || f.model == Model::ho) {
        if (obs == Observable::J1) throw InputError("J1 observable requires a spin model");
        // Without spin structure, <I> is measured in the H0 eigenbasis as the level index.
        O = RMat::Zero(d, d);
        for (int n = 0; n < d; ++n) O(n, n) = n;
    } else {
        auto S = build_spin_ops(f.params.N);
        if (obs == Observable::J1) O = S.J1.real();
        else O = S.J3.real() + S.j * RMat::Identity(d, d);
    }
    const auto& E = es.eigenvalues();
    RVec g0 = es.eigenvectors().col(0);
    GroundStateValue out;
    out.value = g0.dot(O * g0);
    double tol = 1e-10 * std::max(1.0, E.cwiseAbs().maxCoeff());
    if (d > 1 && E(1) - E(0) < tol) {
        out.degenerate = true;
        RVec g1 = es.eigenvectors().col(1);
        out.other_branch = g1.dot(O * g1);
    }
    return out;
}

SweepTable real_sweep(const HamiltonianFamily& f, double lambda_min, double lambda_max, int steps) {
    if (!(lambda_min < lambda_max)) throw InputError("real_sweep requires lambda_min < lambda_max");
    if (steps < 2) throw InputError("real_sweep requires steps >= 2");
    const int d = f.dim();
    SweepTable t;
    t.energies.resize(steps, d);
    Eigen::SelfAdjointEigenSolver<RMat> es;
    for (int s = 0; s < steps; ++s) {
        double lam = lambda_min + (lambda_max - lambda_min) * s / (steps - 1);
        if (s == steps - 1) lam = lambda_max;
        es.compute(f.H0 + lam * f.V, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw NumericalError("real_sweep: eigensolver failed");
        t.lambda.push_back(lam);
        t.energies.row(s) = es.eigenvalues().transpose();
    }
    return t;
}

void write_sweep_csv(const SweepTable& t, std::ostream& os) {
    const int d = static_cast<int>(t.energies.cols());
    os << "lambda";
    for (int n = 1; n <= d; ++n) os << ",E" << n;
    os << '\n';
    char buf[40];
    for (size_t s = 0; s < t.lambda.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", t.lambda[s]);
        os << buf;
        for (int n = 0; n < d; ++n) {
            std::snprintf(buf, sizeof buf, "%.17g", t.energies(static_cast<int>(s), n));
            os << ',' << buf;
        }
        os << '\n';
    }
}

XFamily to_extended(const HamiltonianFamily& f) {
    XFamily x;
    switch (f.model) {
        case Model::qpt1:
        case Model::qpt2:
        case Model::qpt1p: {
            auto [h0, v] = build_model_matrices<xp::XReal>(f.model, f.params);
            x.H0 = std::move(h0);
            x.V = std::move(v);
            break;
        }
        default: {
            const int d = f.dim();
            x.H0 = xp::Dense<xp::XReal>(d);
            x.V = xp::Dense<xp::XReal>(d);
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    x.H0(i, k) = xp::XReal(f.H0(i, k));
                    x.V(i, k) = xp::XReal(f.V(i, k));
                }
        }
    }
    return x;
}

}  // namespace epqpt
