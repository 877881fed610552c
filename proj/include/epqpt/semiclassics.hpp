#pragma once

#include "epqpt/spinmodels.hpp"

#include <string>
#include <vector>

namespace epqpt {

enum class CriticalKind { quartic, doublewell };

struct DoubletFit {
    int n = 1;  // odd level index; splitting E_{n+1} - E_n
    double A = 0, B = 0, C = 0, R2 = 0;
    std::vector<int> used_N;
    std::vector<int> dropped_N;
};

struct CriticalSpectrumModel {
    CriticalKind kind = CriticalKind::quartic;
    double omega = 0;
    std::vector<DoubletFit> doublets;
};

// omega n^{4/3} d^{-1/3}
double quartic_level(int n, int d, double omega);

enum class QuarticReading {
    absolute,    // E_n against n^{4/3}
    excitation,  // E_n - E_1 against (n-1)^{4/3}
};

struct QuarticFit {
    double omega = 0;
    int d = 0;
    int n_lo = 0, n_hi = 0;
    QuarticReading reading = QuarticReading::excitation;
    std::vector<double> rel_dev;  // index n-1; NaN where the reference vanishes
    double max_dev_window = 0;
};

// Least squares through the origin over n_lo <= n <= n_hi (default d/4).
QuarticFit fit_quartic_scale(const std::vector<double>& spectrum, QuarticReading reading = QuarticReading::excitation,
                             int n_lo = 5, int n_hi = 0);

// Lowest levels of the qpt1 critical Hamiltonian (lambda = 0).
struct CriticalLevels {
    int N = 0;
    std::vector<double> gaps;  // gaps[k-1] = E_{k+1} - E_k
    bool extended = false;
};
CriticalLevels critical_levels(const HamiltonianFamily& f, double lambda, int count, bool extended,
                               unsigned digits = 50);

// ln(E_{n+1}-E_n) = ln A - B d - C ln d per odd n (n = 1, 3, ...).
std::vector<DoubletFit> fit_doublet_splittings(const std::vector<CriticalLevels>& spectra, int doublets = 3,
                                               double floor = 1e-14);

// Mean of even-n spacings among the first 6 levels.
double doublewell_omega(const CriticalLevels& s);

}  // namespace epqpt
