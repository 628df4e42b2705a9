#pragma once

#include <Eigen/Dense>

#include <string>

// Sine/cosine product bases on an axis-aligned rectangle (0,a)x(0,b) and the
// change of basis between the two families used on the x-axis:
//   integer family      sqrt(2/a) sin(pi q x / a),         q = 1,2,...
//   half-integer family sqrt(2/a) cos(pi (q-1/2) x / a),   q = 1,2,...
// Both are orthonormal on (0,a); the half-integer family has a free end at
// x = 0 and a node at x = a. The y-factor sqrt(2/b) sin(pi k y / b) is shared.

namespace superscar {

enum class SeriesKind {
    half_integer_cos,  // free end at x = 0 (mixed-edge problems)
    integer_sin,       // node at x = 0
    full_rectangle,    // integer sines in both directions on a bounding box
};

std::string to_string(SeriesKind kind);

struct ExpansionBasis {
    SeriesKind kind = SeriesKind::integer_sin;
    int q_max = 1;  // x-direction truncation, indices 1..q_max
    int k_max = 1;  // y-direction truncation, indices 1..k_max
    double a = 1.0;
    double b = 1.0;

    // Smallest untruncated mode energy; compare against the target window to
    // choose a truncation with margin.
    double corner_energy() const;
};

// Overlap <sin_m | cos_n> = (1/pi)(1/(m+n-1/2) + 1/(m-n+1/2)) between the two
// x-families; rows of the infinite matrix are orthonormal.
double series_mixing_element(int m, int n);

// Dense truncation of the mixing matrix, rows = integer family 1..rows,
// columns = half-integer family 1..cols.
Eigen::MatrixXd series_mixing_matrix(int rows, int cols);

// x-factor of basis function q of the given family (unit L2 norm on (0,a)).
double basis_x_factor(SeriesKind kind, int q, double x, double a);

// y-factor sqrt(2/b) sin(pi k y / b).
double basis_y_factor(int k, double y, double b);

// Change of x-family for a coefficient block laid out as (q, k) with q rows.
// Same-kind calls return a size-adjusted copy. Throws std::invalid_argument
// when the rectangles differ or either basis is full_rectangle with a kind
// change.
Eigen::MatrixXd reexpand(const Eigen::MatrixXd& coeffs, const ExpansionBasis& from,
                         const ExpansionBasis& to);

// Series value at one point from a coefficient block.
double evaluate_series(const Eigen::MatrixXd& coeffs, const ExpansionBasis& basis,
                       double x, double y);

}  // namespace superscar
