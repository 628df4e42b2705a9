#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include "superscar/numerics.hpp"

using namespace superscar;
using cplx = std::complex<double>;

TEST_CASE("gauss-legendre rules integrate polynomials and smooth functions") {
    const auto r6 = gauss_legendre(6);
    REQUIRE(r6.x.size() == 6);
    double sw = 0, p10 = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        sw += r6.w[i];
        p10 += r6.w[i] * std::pow(r6.x[i], 10);
    }
    CHECK(sw == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(p10 == doctest::Approx(2.0 / 11.0).epsilon(1e-14));  // degree 10 < 2*6
    // symmetry of nodes
    for (std::size_t i = 0; i < 3; ++i) CHECK(r6.x[i] == doctest::Approx(-r6.x[5 - i]).epsilon(1e-14));

    const auto m = mapped_rule(gauss_legendre(24), 0.0, std::numbers::pi);
    double s = 0;
    for (std::size_t i = 0; i < m.x.size(); ++i) s += m.w[i] * std::sin(m.x[i]);
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("faddeeva function against frozen references") {
    struct Ref { cplx z, w; };
    // frozen from an independent high-precision evaluation
    const Ref refs[] = {
        {{0.5, 0.5}, {5.3315670791217484e-01, 2.3048823138445851e-01}},
        {{3.0, 0.1}, {7.9426809987700013e-03, 2.0074234309867764e-01}},
        {{0.1, 3.0}, {1.7884242969019382e-01, 5.4327498088566463e-03}},
        {{6.0, 6.0}, {4.7335271133396223e-02, 4.6682744869732201e-02}},
        {{12.0, 0.01}, {3.9595190540519380e-05, 4.7180745358665926e-02}},
        {{0.0, 1.0}, {4.2758357615580700e-01, 0.0}},
        {{2.0, 0.0}, {1.8315638888734179e-02, 3.4002621706606623e-01}},
    };
    for (const auto& r : refs) {
        const cplx got = faddeeva(r.z);
        CHECK(std::abs(got - r.w) <= 1e-12 * std::max(1.0, std::abs(r.w)));
    }
}

TEST_CASE("complex erfc against frozen references and the real axis") {
    struct Ref { cplx z, v; };
    const Ref refs[] = {
        {{0.3, 0.2}, {0.65876251852786138, -0.20852883788276888}},
        {{2.0, -1.0}, {-0.0036063427256517507, -0.011259006028815025}},
        {{-1.5, 0.7}, {2.0404046154368713, -0.033625498125576171}},
        {{4.0, 3.0}, {8.9338214608317639e-05, 4.9720260544966039e-05}},
    };
    for (const auto& r : refs) {
        const cplx got = erfc_complex(r.z);
        CHECK(std::abs(got - r.v) <= 1e-12 * std::max(1e-4, std::abs(r.v)));
    }
    for (double x : {-2.0, -0.4, 0.0, 0.7, 1.9, 4.5}) {
        const cplx got = erfc_complex({x, 0.0});
        CHECK(got.real() == doctest::Approx(std::erfc(x)).epsilon(1e-13));
        CHECK(std::abs(got.imag()) < 1e-15);
    }
    // reflection erfc(z) + erfc(-z) = 2
    const cplx z{1.3, 2.1};
    CHECK(std::abs(erfc_complex(z) + erfc_complex(-z) - 2.0) < 1e-12);
}

TEST_CASE("golden section minimizer") {
    const double x = golden_minimize([](double t) { return (t - 1.3) * (t - 1.3) + 0.5; }, -4.0, 5.0, 1e-10);
    CHECK(x == doctest::Approx(1.3).epsilon(1e-8));
}

TEST_CASE("line fit recovers exact coefficients") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        xs.push_back(0.3 * i);
        ys.push_back(2.5 * 0.3 * i - 0.75);
    }
    const auto f = fit_line(xs, ys);
    CHECK(f.slope == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(f.slope_stderr < 1e-10);
}

TEST_CASE("nonlinear fit recovers decay parameters") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) {
        const double x = 0.1 * i;
        xs.push_back(x);
        ys.push_back(3.2 * std::exp(-0.9 * x));
    }
    const auto model = [](std::span<const double> p, double x) { return p[0] * std::exp(-p[1] * x); };
    const auto p = fit_curve(model, xs, ys, {}, {1.0, 0.2});
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(3.2).epsilon(1e-8));
    CHECK(p[1] == doctest::Approx(0.9).epsilon(1e-8));
}

TEST_CASE("bessel sequence matches the standard library and sum rules") {
    for (double x : {0.3, 2.0, 10.5, 47.0, 113.0, 301.7}) {
        const int n_max = static_cast<int>(x) + 40;
        const auto j = bessel_j_sequence(x, n_max);
        for (int n = 0; n <= n_max; n += std::max(1, n_max / 13)) {
            const double ref = std::cyl_bessel_j(n, x);
            CHECK(std::abs(j[n] - ref) < 1e-10);
        }
        // Parseval-type sum rule J_0^2 + 2 sum_k J_k^2 = 1
        double s = j[0] * j[0];
        for (int n = 1; n <= n_max; ++n) s += 2.0 * j[n] * j[n];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }
    const auto j0 = bessel_j_sequence(0.0, 5);
    CHECK(j0[0] == 1.0);
    CHECK(j0[3] == 0.0);
}

TEST_CASE("parallel for covers the range once and propagates exceptions") {
    std::vector<std::atomic<int>> hits(977);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(100, 3,
                                 [](std::size_t i) {
                                     if (i == 57) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}
