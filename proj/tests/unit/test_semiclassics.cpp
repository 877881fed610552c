#include <doctest.h>

#include "epqpt/scalingfit.hpp"
#include "epqpt/semiclassics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace epqpt;

namespace {

std::vector<double> qpt2_critical_spectrum(int d) {
    auto f = family_qpt2(d - 1);
    Eigen::SelfAdjointEigenSolver<RMat> es(f.H0 + f.V, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + d};
}

std::vector<CriticalLevels> qpt1_critical(int n_lo, int n_hi, bool extended) {
    std::vector<CriticalLevels> out;
    for (int N = n_lo; N <= n_hi; ++N) out.push_back(critical_levels(family_qpt1(N, 3.0), 0.0, 6, extended));
    return out;
}

}  // namespace

TEST_CASE("quartic level formula") {
    CHECK(quartic_level(8, 64, 1.0) == doctest::Approx(4.0));
    CHECK(quartic_level(1, 1, 2.5) == doctest::Approx(2.5));
    // Spacing form (4 omega / 3) (n / d)^{1/3} for n >> 1.
    const int n = 1000, d = 1000000;
    double s = quartic_level(n + 1, d, 1.0) - quartic_level(n, d, 1.0);
    CHECK(s / (4.0 / 3.0 * std::cbrt(double(n) / d)) == doctest::Approx(1.0).epsilon(1e-3));
    for (int k = 1; k < 50; ++k) {
        CHECK(quartic_level(k + 1, 64, 1.0) > quartic_level(k, 64, 1.0));
        CHECK(quartic_level(k, 65, 1.0) < quartic_level(k, 64, 1.0));
    }
    CHECK_THROWS_AS(quartic_level(0, 4, 1.0), InputError);
    CHECK_THROWS_AS(quartic_level(5, 4, 1.0), InputError);
}

TEST_CASE("quartic fit is exact on synthetic spectra") {
    const int d = 100;
    std::vector<double> absolute(d), excitation(d);
    for (int n = 1; n <= d; ++n) {
        absolute[n - 1] = 2 * std::pow(n, 4.0 / 3.0) * std::pow(d, -1.0 / 3.0);
        excitation[n - 1] = -3.0 + 2 * std::pow(n - 1, 4.0 / 3.0) * std::pow(d, -1.0 / 3.0);
    }
    auto a = fit_quartic_scale(absolute, QuarticReading::absolute);
    CHECK(a.omega == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(a.max_dev_window < 1e-12);
    CHECK(a.n_hi == d / 4);
    auto e = fit_quartic_scale(excitation, QuarticReading::excitation);
    CHECK(e.omega == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(std::isnan(e.rel_dev[0]));
    CHECK_THROWS_AS(fit_quartic_scale(std::vector<double>(20, 1.0)), InputError);
}

TEST_CASE("qpt2 critical spectrum follows the quartic law at low energy") {
    const int d = 513;
    auto E = qpt2_critical_spectrum(d);
    auto fit = fit_quartic_scale(E, QuarticReading::excitation, 5, 128);
    CHECK(fit.omega > 0);
    CHECK(fit.max_dev_window <= 0.05);
    // The approximation is low-energy: the top of the spectrum departs from it.
    CHECK(std::abs(fit.rel_dev[d - 1]) > fit.max_dev_window);
}

TEST_CASE("qpt1 critical doublets: exponential form, ordering, and spacing between doublets") {
    auto dbl = qpt1_critical(5, 25, false);
    auto fits = fit_doublet_splittings(dbl, 3);
    REQUIRE_FALSE(fits.empty());
    // Double precision cannot resolve the lowest splitting at the upper end of the range.
    CHECK_FALSE(fits[0].dropped_N.empty());
    for (int N : fits[0].dropped_N) CHECK(N >= 18);

    auto ext = qpt1_critical(5, 25, true);
    auto xf = fit_doublet_splittings(ext, 3);
    REQUIRE(xf.size() >= 1);
    CHECK(xf[0].n == 1);
    CHECK(xf[0].dropped_N.empty());
    CHECK(xf[0].used_N.size() == 21);
    CHECK(xf[0].R2 >= 0.99);
    CHECK(xf[0].B > 0);

    // The exponential constant matches the EP scaling constant.
    std::vector<int> Ns;
    for (int N = 5; N <= 25; ++N) Ns.push_back(N);
    auto eta = fit_first_order(nearest_ep_points(Model::qpt1, ModelParams{0, 3.0, 4.0, 1.0}, Ns)).eta;
    CHECK(std::abs(xf[0].B - eta) / eta <= 0.05);

    for (const auto& s : ext)
        if (s.N >= 15) {
            CHECK(s.gaps[0] < s.gaps[2]);
            CHECK(s.gaps[2] < s.gaps[4]);
        }

    const auto& last = ext.back();
    const double w = doublewell_omega(last);
    CHECK(w > 0);
    CHECK(std::abs(last.gaps[1] - w) <= 0.1 * w);
    CHECK(std::abs(last.gaps[3] - w) <= 0.1 * w);
    CHECK_THROWS_AS(fit_doublet_splittings(std::vector<CriticalLevels>(ext.begin(), ext.begin() + 4)), InputError);
}

TEST_CASE("critical_levels in double and extended precision agree where resolvable") {
    auto f = family_qpt1(10, 3.0);
    auto a = critical_levels(f, 0.0, 6, false);
    auto b = critical_levels(f, 0.0, 6, true);
    REQUIRE(a.gaps.size() == 5);
    for (size_t k = 0; k < 5; ++k) CHECK(std::abs(a.gaps[k] - b.gaps[k]) <= 1e-10 * (1 + b.gaps[k]));
    CHECK_THROWS_AS(critical_levels(f, 0.0, 1, false), InputError);
}
