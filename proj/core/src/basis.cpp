#include "superscar/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace superscar {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::half_integer_cos: return "half_integer_cos";
        case SeriesKind::integer_sin: return "integer_sin";
        case SeriesKind::full_rectangle: return "full_rectangle";
    }
    return "?";
}

double ExpansionBasis::corner_energy() const {
    const double qx = (kind == SeriesKind::half_integer_cos) ? q_max + 0.5 : q_max + 1.0;
    return kPi * kPi * (qx * qx / (a * a) + (k_max + 1.0) * (k_max + 1.0) / (b * b));
}

double series_mixing_element(int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("series_mixing_element: indices start at 1");
    return (1.0 / kPi) * (1.0 / (m + n - 0.5) + 1.0 / (m - n + 0.5));
}

Eigen::MatrixXd series_mixing_matrix(int rows, int cols) {
    Eigen::MatrixXd A(rows, cols);
    for (int m = 1; m <= rows; ++m)
        for (int n = 1; n <= cols; ++n) A(m - 1, n - 1) = series_mixing_element(m, n);
    return A;
}

double basis_x_factor(SeriesKind kind, int q, double x, double a) {
    const double s = std::sqrt(2.0 / a);
    if (kind == SeriesKind::half_integer_cos) return s * std::cos(kPi * (q - 0.5) * x / a);
    return s * std::sin(kPi * q * x / a);
}

double basis_y_factor(int k, double y, double b) {
    return std::sqrt(2.0 / b) * std::sin(kPi * k * y / b);
}

Eigen::MatrixXd reexpand(const Eigen::MatrixXd& coeffs, const ExpansionBasis& from,
                         const ExpansionBasis& to) {
    if (coeffs.rows() != from.q_max || coeffs.cols() != from.k_max)
        throw std::invalid_argument("reexpand: coefficient block does not match source basis");
    if (from.a != to.a || from.b != to.b)
        throw std::invalid_argument("reexpand: bases live on different rectangles");
    if (from.kind == to.kind) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(to.q_max, to.k_max);
        const int qr = std::min(from.q_max, to.q_max), kr = std::min(from.k_max, to.k_max);
        out.topLeftCorner(qr, kr) = coeffs.topLeftCorner(qr, kr);
        return out;
    }
    const bool from_half = from.kind == SeriesKind::half_integer_cos;
    const bool to_half = to.kind == SeriesKind::half_integer_cos;
    if (from.kind == SeriesKind::full_rectangle || to.kind == SeriesKind::full_rectangle)
        throw std::invalid_argument("reexpand: no mixing into or out of a full-rectangle basis");
    Eigen::MatrixXd out(to.q_max, to.k_max);
    const int kr = std::min(from.k_max, to.k_max);
    if (!from_half && to_half) {
        // columns of the mixing matrix index the half-integer family
        const Eigen::MatrixXd A = series_mixing_matrix(from.q_max, to.q_max);
        out.setZero();
        out.leftCols(kr) = A.transpose() * coeffs.leftCols(kr);
    } else {
        const Eigen::MatrixXd A = series_mixing_matrix(to.q_max, from.q_max);
        out.setZero();
        out.leftCols(kr) = A * coeffs.leftCols(kr);
    }
    return out;
}

double evaluate_series(const Eigen::MatrixXd& coeffs, const ExpansionBasis& basis,
                       double x, double y) {
    Eigen::VectorXd xf(basis.q_max), yf(basis.k_max);
    for (int q = 1; q <= basis.q_max; ++q) xf(q - 1) = basis_x_factor(basis.kind, q, x, basis.a);
    for (int k = 1; k <= basis.k_max; ++k) yf(k - 1) = basis_y_factor(k, y, basis.b);
    return xf.dot(coeffs * yf);
}

}  // namespace superscar
