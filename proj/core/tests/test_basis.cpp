#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "superscar/basis.hpp"
#include "superscar/numerics.hpp"

using namespace superscar;
namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("mixing elements agree with direct quadrature") {
    const double a = 2.643;
    const auto rule = mapped_rule(gauss_legendre(400), 0.0, a);
    for (int m : {1, 2, 7, 19}) {
        for (int n : {1, 3, 8, 20}) {
            double s = 0;
            for (std::size_t i = 0; i < rule.x.size(); ++i)
                s += rule.w[i] * basis_x_factor(SeriesKind::integer_sin, m, rule.x[i], a) *
                     basis_x_factor(SeriesKind::half_integer_cos, n, rule.x[i], a);
            CHECK(s == doctest::Approx(series_mixing_element(m, n)).epsilon(1e-12));
        }
    }
    CHECK(series_mixing_element(1, 1) == doctest::Approx((8.0 / 3.0) / pi).epsilon(1e-14));
}

TEST_CASE("mixing matrix rows are orthonormal up to a 1/size truncation tail") {
    for (int size : {64, 256, 1024}) {
        const Eigen::MatrixXd A = series_mixing_matrix(size, size);
        double worst = 0;
        for (int m = 1; m <= size / 2; ++m) {
            const double rs = A.row(m - 1).squaredNorm();
            worst = std::max(worst, std::abs(rs - 1.0));
        }
        CHECK(worst < 1.0 / size);
        // distinct rows nearly orthogonal away from the truncation edge
        CHECK(std::abs(A.row(2).dot(A.row(9))) < 1e-2);
    }
    // the defect really is O(1/size): successive quarterings
    const double d64 = std::abs(series_mixing_matrix(64, 64).row(31).squaredNorm() - 1.0);
    const double d256 = std::abs(series_mixing_matrix(256, 256).row(127).squaredNorm() - 1.0);
    CHECK(d256 < d64);
}

TEST_CASE("reexpand identity and incompatibility errors") {
    ExpansionBasis e{SeriesKind::half_integer_cos, 6, 4, 2.0, 3.0};
    Eigen::MatrixXd c = Eigen::MatrixXd::Random(6, 4);
    CHECK((reexpand(c, e, e) - c).norm() == 0.0);

    ExpansionBasis other = e;
    other.a = 2.5;
    other.kind = SeriesKind::integer_sin;
    CHECK_THROWS_AS(reexpand(c, e, other), std::invalid_argument);
    ExpansionBasis full = e;
    full.kind = SeriesKind::full_rectangle;
    CHECK_THROWS_AS(reexpand(c, e, full), std::invalid_argument);
}

TEST_CASE("pure sine reproduced through the half-integer family") {
    const double a = 2.643, b = 4.754;
    ExpansionBasis from{SeriesKind::integer_sin, 1, 1, a, b};
    ExpansionBasis to{SeriesKind::half_integer_cos, 4096, 1, a, b};
    Eigen::MatrixXd c(1, 1);
    c(0, 0) = 1.0;
    const Eigen::MatrixXd f = reexpand(c, from, to);
    CHECK(f.col(0).squaredNorm() == doctest::Approx(1.0).epsilon(1e-3));
    for (double t : {0.04, 0.11, 0.3, 0.52, 0.77, 0.96}) {
        const double x = t * a, y = 0.5 * b;
        const double want = evaluate_series(c, from, x, y);
        const double got = evaluate_series(f, to, x, y);
        CHECK(std::abs(got - want) < 1e-3);
    }
}

TEST_CASE("round trip through the other family preserves low modes") {
    const double a = 1.7, b = 2.9;
    ExpansionBasis src{SeriesKind::half_integer_cos, 8, 3, a, b};
    ExpansionBasis big{SeriesKind::integer_sin, 2048, 3, a, b};
    std::mt19937 rng(42);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd c(8, 3);
    for (int q = 0; q < 8; ++q)
        for (int k = 0; k < 3; ++k) c(q, k) = gauss(rng) / ((q + 1.0) * (q + 1.0));
    c /= c.norm();
    const Eigen::MatrixXd mid = reexpand(c, src, big);
    CHECK(mid.norm() == doctest::Approx(1.0).epsilon(1e-3));
    const Eigen::MatrixXd back = reexpand(mid, big, src);
    CHECK((back - c).norm() < 2e-3);
}

TEST_CASE("series evaluation matches a hand-rolled sum") {
    ExpansionBasis basis{SeriesKind::half_integer_cos, 5, 3, 1.3, 0.8};
    Eigen::MatrixXd c = Eigen::MatrixXd::Random(5, 3);
    const double x = 0.61, y = 0.27;
    double want = 0;
    for (int q = 1; q <= 5; ++q)
        for (int k = 1; k <= 3; ++k)
            want += c(q - 1, k - 1) * basis_x_factor(basis.kind, q, x, basis.a) *
                    basis_y_factor(k, y, basis.b);
    CHECK(evaluate_series(c, basis, x, y) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("corner energy exceeds any retained mode") {
    ExpansionBasis basis{SeriesKind::integer_sin, 12, 9, 2.0, 3.0};
    const double corner = basis.corner_energy();
    for (int q = 1; q <= 12; ++q)
        for (int k = 1; k <= 9; ++k)
            CHECK(pi * pi * (q * q / 4.0 + k * k / 9.0) < corner);
}
