#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "superscar/diffraction.hpp"
#include "superscar/numerics.hpp"
#include "superscar/slits.hpp"

using namespace superscar;
namespace nums = std::numbers;

namespace {

int comfortable_order(double kappa) {
    return static_cast<int>(std::ceil(8.0 * std::sqrt(kappa))) + 16;
}

}  // namespace

TEST_CASE("fredholm solve: frozen eigenvalues and the trace identity") {
    const auto s200 = solve_fredholm(200.0, 12, 114);
    CHECK(s200.quadrature_order == 114);
    CHECK(s200.eigenvalues.size() == 12);
    // frozen from an independent symmetric-eigensolver evaluation
    CHECK(s200.eigenvalues[0] == doctest::Approx(0.9970921379).epsilon(1e-9));
    CHECK(s200.eigenvalues[1] == doctest::Approx(0.9884194575).epsilon(1e-9));
    CHECK(s200.eigenvalues[4] == doctest::Approx(0.9297972260).epsilon(1e-9));

    const auto s500 = solve_fredholm(500.0, 8, 180);
    CHECK(s500.eigenvalues[0] == doctest::Approx(0.9988112407).epsilon(1e-9));
    CHECK(s500.eigenvalues[1] == doctest::Approx(0.9952534641).epsilon(1e-9));

    const auto s1000 = solve_fredholm(1000.0, 8, 256);
    CHECK(s1000.eigenvalues[0] == doctest::Approx(0.9993990938).epsilon(1e-9));
    CHECK(s1000.eigenvalues[1] == doctest::Approx(0.9975985463).epsilon(1e-9));
    CHECK(s1000.eigenvalues[4] == doctest::Approx(0.9850854359).epsilon(1e-9));

    // the discrete spectrum carries the exact kernel trace 2 sqrt(kappa/pi)
    for (const auto* s : {&s200, &s500, &s1000})
        CHECK(std::abs(s->trace - 2.0 * std::sqrt(s->kappa / nums::pi)) < 1e-8);

    // eigenvalues decrease and stay inside the contraction band (0, 1)
    for (const auto* s : {&s200, &s500, &s1000}) {
        for (std::size_t i = 0; i < s->eigenvalues.size(); ++i) {
            CHECK(s->eigenvalues[i] > 0.0);
            CHECK(s->eigenvalues[i] < 1.0);
            if (i > 0) CHECK(s->eigenvalues[i] < s->eigenvalues[i - 1]);
        }
    }
}

TEST_CASE("fredholm solve: input validation") {
    CHECK_THROWS_AS(solve_fredholm(-5.0, 4, 100), std::invalid_argument);
    CHECK_THROWS_AS(solve_fredholm(0.0, 4, 100), std::invalid_argument);
    // 8 sqrt(200) = 113.1: order 100 under-resolves the kernel
    CHECK_THROWS_AS(solve_fredholm(200.0, 4, 100), std::invalid_argument);
    // n_modes beyond order/4 is outside the trusted part of the spectrum
    CHECK_THROWS_AS(solve_fredholm(200.0, 40, 114), std::invalid_argument);
    CHECK_THROWS_AS(solve_fredholm(200.0, 0, 114), std::invalid_argument);
    CHECK_NOTHROW(solve_fredholm(200.0, 28, 114));
}

TEST_CASE("fredholm eigenfunctions: parity, orthonormality, interior sine shape") {
    const auto s = solve_fredholm(200.0, 8, 120);
    const std::size_t order = s.nodes.size();

    // Psi_n(-x) = (-1)^{n+1} Psi_n(x), exact on the symmetric node set
    for (int n = 1; n <= 8; ++n) {
        const auto& psi = s.eigenfunctions[static_cast<std::size_t>(n - 1)];
        const double sign = (n % 2 == 1) ? 1.0 : -1.0;
        for (std::size_t i = 0; i < order; ++i)
            CHECK(psi[i] == doctest::Approx(sign * psi[order - 1 - i]).epsilon(1e-8));
    }

    // orthonormal under the quadrature weight
    for (int a = 1; a <= 8; ++a) {
        for (int b = a; b <= 8; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < order; ++i)
                dot += s.weights[i] * s.eigenfunctions[a - 1][i] * s.eigenfunctions[b - 1][i];
            CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-10));
        }
    }

    // interior of the leading mode follows sin(pt (x+1)) closely
    const double pt = nums::pi / 2.0;
    double amp_num = 0.0, amp_den = 0.0;
    for (std::size_t i = 0; i < order; ++i) {
        const double sine = std::sin(pt * (s.nodes[i] + 1.0));
        amp_num += s.weights[i] * s.eigenfunctions[0][i] * sine;
        amp_den += s.weights[i] * sine * sine;
    }
    const double amp = amp_num / amp_den;
    CHECK(amp > 0.0);
    for (std::size_t i = 0; i < order; ++i) {
        if (std::abs(s.nodes[i]) > 0.7) continue;
        const double sine = std::sin(pt * (s.nodes[i] + 1.0));
        CHECK(std::abs(s.eigenfunctions[0][i] - amp * sine) < 0.05 * std::abs(amp));
    }

    // Nystrom extension reproduces node values and stays smooth at endpoints
    for (std::size_t i = 0; i < order; i += 17)
        CHECK(s.extend(1, s.nodes[i]) == doctest::Approx(s.eigenfunctions[0][i]).epsilon(1e-10));
    CHECK(std::isfinite(s.extend(1, 1.0)));
    CHECK(std::isfinite(s.extend(1, -1.0)));
}

TEST_CASE("fredholm eigenvalues: large-kappa asymptote and monotone growth") {
    // spec of the asymptote at kappa = 200, n = 1
    const auto s = solve_fredholm(200.0, 2, comfortable_order(200.0));
    CHECK(std::abs(s.eigenvalues[0] - 0.99710) < 1e-3);
    CHECK(std::abs(s.eigenvalues[0] - fredholm_eigenvalue_asymptote(200.0, 1)) < 1e-3);

    // Lambda_n(kappa) increases with kappa at fixed n
    const std::vector<double> kappas{10.0, 30.0, 100.0, 300.0, 1000.0};
    std::vector<std::vector<double>> table;
    for (double kappa : kappas) {
        const auto sol = solve_fredholm(kappa, 4, comfortable_order(kappa));
        table.push_back(sol.eigenvalues);
    }
    for (int n = 0; n < 4; ++n)
        for (std::size_t j = 1; j < kappas.size(); ++j)
            CHECK(table[j][n] > table[j - 1][n]);
}

TEST_CASE("fredholm eigenvalues: doubling the quadrature order is stable") {
    for (double kappa : {200.0, 1000.0}) {
        const int order = comfortable_order(kappa);
        const auto coarse = solve_fredholm(kappa, 10, order);
        const auto fine = solve_fredholm(kappa, 10, 2 * order);
        for (int n = 0; n < 10; ++n)
            CHECK(std::abs(coarse.eigenvalues[n] - fine.eigenvalues[n]) < 1e-8);
    }
}

TEST_CASE("asymptote coefficient: kappa sweep at n = 1 recovers 0.206") {
    const std::vector<double> kappas{200.0, 300.0, 400.0, 500.0, 700.0, 1000.0};
    const double pt2 = std::pow(nums::pi / 2.0, 2);
    double num = 0.0, den = 0.0;
    for (double kappa : kappas) {
        const auto sol = solve_fredholm(kappa, 1, comfortable_order(kappa));
        const double residual = sol.eigenvalues[0] - 1.0 + pt2 / (4.0 * kappa);
        const double basis = pt2 / std::pow(kappa, 1.5);
        num += residual * basis;
        den += basis * basis;
    }
    const double c = num / den;
    CHECK(std::abs(c - 0.206) < 0.02);
    // frozen window of the fit itself
    CHECK(c > 0.195);
    CHECK(c < 0.212);
}

TEST_CASE("boundary values: frozen anchors, decay, slope toward pt/2") {
    const auto s200 = solve_fredholm(200.0, 4, comfortable_order(200.0));
    // frozen magnitudes at kappa = 200 (sine-fit normalization)
    CHECK(boundary_value(s200, 1) == doctest::Approx(0.053217).epsilon(2e-4));
    CHECK(boundary_value(s200, 2) == doctest::Approx(0.106536).epsilon(2e-4));
    CHECK(boundary_value(s200, 3) == doctest::Approx(0.160058).epsilon(2e-4));

    // against the closed-form decay law, the spec's 10% budget
    const double asym = boundary_value_asymptote(200.0, 1);
    CHECK(asym == doctest::Approx((nums::pi / 2.0) * (1.0 / (2.0 * std::sqrt(200.0)) - 1.0 / 1600.0))
                      .epsilon(1e-14));
    CHECK(std::abs(boundary_value(s200, 1) - asym) < 0.1 * asym);

    // Psi_n(1) -> 0 with kappa; the rescaled value climbs toward pt/2
    for (int n = 1; n <= 3; ++n) {
        double prev_value = 1e9, prev_slope = 0.0;
        for (double kappa : {100.0, 200.0, 400.0, 800.0}) {
            const auto sol = solve_fredholm(kappa, 4, comfortable_order(kappa));
            const double value = boundary_value(sol, n);
            CHECK(value < prev_value);
            const double slope = value * std::sqrt(kappa);
            CHECK(slope > prev_slope);
            prev_value = value;
            prev_slope = slope;
        }
        const double target = 0.5 * (nums::pi * n / 2.0);
        CHECK(prev_slope / target > 0.95);
        CHECK(prev_slope / target < 1.0);
    }

    CHECK_THROWS_AS(boundary_value(s200, 5), std::out_of_range);
}

TEST_CASE("complex energy shift: factor structure and shared constant") {
    const double k = 350.0, d = 2.2, w = 0.31;
    const auto shift = complex_energy_shift(k, d, w, 2);
    CHECK(shift.real() == shift.imag());  // (1 + i) structure

    const double p = nums::pi * 2.0 / w;
    const double expected = leakage_constant() * p * p * std::sqrt(d / (k * w * w));
    CHECK(shift.real() == doctest::Approx(expected).epsilon(1e-14));

    // collision-count consistency: Im dE * L / k == C sqrt(kd) phi^2 L / w at phi = p/k
    const double length = 17.0;
    const double lhs = shift.imag() * length / k;
    const double phi = p / k;
    const double rhs = leakage_constant() * std::sqrt(k * d) * phi * phi * length / w;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    // same constant as the grating leakage law, well beyond 3 digits
    CHECK(leakage_constant() == doctest::Approx(-2.0 * kZetaHalf / std::sqrt(nums::pi)).epsilon(1e-15));

    CHECK_THROWS_AS(complex_energy_shift(-1.0, d, w, 1), std::invalid_argument);
    CHECK_THROWS_AS(complex_energy_shift(k, d, w, 0), std::invalid_argument);
}
