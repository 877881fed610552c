#pragma once

#include "epqpt/types.hpp"
#include "epqpt/xprec.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace epqpt {

struct SpinOperators {
    int N = 0;
    double j = 0;
    int d = 0;
    CMat J1, J2, J3, Jplus, Jminus;
};

// Basis |j,m>, m = -j..j ascending.
SpinOperators build_spin_ops(int N);

enum class Model { qpt1, qpt2, qpt1p, ho, custom };

std::string to_string(Model m);
Model parse_model(const std::string& s);

struct ModelParams {
    int N = 0;
    double a = 3.0;
    double c = 4.0;
    double omega = 1.0;
};

struct HamiltonianFamily {
    RMat H0;
    RMat V;
    Model model = Model::custom;
    ModelParams params;
    std::optional<double> critical_lambda;

    int dim() const { return static_cast<int>(H0.rows()); }
    // Energy scale used for relative tolerances.
    double scale() const;
};

HamiltonianFamily family_qpt1(int N, double a = 3.0);
HamiltonianFamily family_qpt2(int N);
HamiltonianFamily family_qpt1p(int N, double c = 4.0);
HamiltonianFamily family_ho(int d, double omega = 1.0);
HamiltonianFamily family_custom(RMat H0, RMat V);
HamiltonianFamily make_family(Model m, const ModelParams& p);

CMat evaluate_at(const HamiltonianFamily& f, cplx lambda);
void evaluate_into(const HamiltonianFamily& f, cplx lambda, CMat& out);

enum class Observable { J1, inversion };

struct GroundStateValue {
    double value = 0;
    bool degenerate = false;
    // Value on the second member of a degenerate ground doublet.
    double other_branch = 0;
};

GroundStateValue ground_state_observable(const HamiltonianFamily& f, double lambda, Observable obs);

struct SweepTable {
    std::vector<double> lambda;
    RMat energies;  // rows: grid points, columns: ascending levels
};

SweepTable real_sweep(const HamiltonianFamily& f, double lambda_min, double lambda_max, int steps);
void write_sweep_csv(const SweepTable& t, std::ostream& os);

// Native extended-precision construction (no rounding through double for
// the spin models; custom/ho entries are converted exactly).
struct XFamily {
    xp::Dense<xp::XReal> H0, V;
};
XFamily to_extended(const HamiltonianFamily& f);

template <class R>
std::pair<xp::Dense<R>, xp::Dense<R>> spin_j1_j3(int N) {
    using std::sqrt;
    const int d = N + 1;
    const R j = R(N) / 2;
    xp::Dense<R> J1(d), J3(d);
    for (int k = 0; k < d; ++k) {
        R m = -j + R(k);
        J3(k, k) = m;
        if (k + 1 < d) {
            R jp = sqrt(j * (j + 1) - m * (m + 1));
            J1(k + 1, k) = jp / 2;
            J1(k, k + 1) = jp / 2;
        }
    }
    return {J1, J3};
}

template <class R>
xp::Dense<R> dense_mul(const xp::Dense<R>& A, const xp::Dense<R>& B) {
    const int n = A.n;
    xp::Dense<R> C(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            if (A(i, k) == 0) continue;
            for (int j = 0; j < n; ++j) C(i, j) += A(i, k) * B(k, j);
        }
    return C;
}

template <class R>
std::pair<xp::Dense<R>, xp::Dense<R>> build_model_matrices(Model model, const ModelParams& p) {
    auto [J1, J3] = spin_j1_j3<R>(p.N);
    const int d = p.N + 1;
    const R j = R(p.N) / 2;
    xp::Dense<R> H0(d), V(d);
    switch (model) {
        case Model::qpt1: {
            auto J11 = dense_mul(J1, J1);
            auto J13 = dense_mul(J1, J3);
            auto J31 = dense_mul(J3, J1);
            R a = R(p.a);
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    H0(i, k) = J3(i, k) - (a / j) * J11(i, k);
                    V(i, k) = -J1(i, k) - (J13(i, k) + J31(i, k)) / (2 * j);
                }
            break;
        }
        case Model::qpt2: {
            auto J11 = dense_mul(J1, J1);
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    H0(i, k) = J3(i, k);
                    V(i, k) = -J11(i, k) / (2 * j);
                }
            break;
        }
        case Model::qpt1p: {
            xp::Dense<R> B(d);
            R c = R(p.c);
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) B(i, k) = J1(i, k) + c * (J3(i, k) + (i == k ? j : R(0)));
            auto BB = dense_mul(B, B);
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    H0(i, k) = J3(i, k);
                    V(i, k) = -BB(i, k) / (2 * j);
                }
            break;
        }
        default:
            throw InputError("build_model_matrices: not a spin model");
    }
    return {H0, V};
}

}  // namespace epqpt
