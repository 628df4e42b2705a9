#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superscar/basis.hpp"
#include "superscar/geometry.hpp"

// Eigenvalue and eigenfunction solvers for the two billiards.
//
// Barrier: Helmholtz-exact mode matching. The field is expanded per y-channel
// as sin(pi j y / b) * s_j(x; E) with s_j vanishing at x = a; the mixed edge
// at x = 0 (Dirichlet below the slit tip, Neumann above) is imposed by
// Galerkin projection onto half-interval modes, giving a square matrix whose
// smallest singular value dips at eigenvalues.
//
// Triangle: method of particular solutions about the pi/8 corner with basis
// sin(8 n theta) J_{8n}(k r), exact on the two corner edges; the remaining
// (vertical) edge is collocated and the boundary-to-interior singular value
// ratio is scanned in energy.

namespace superscar {

struct SpectralWindow {
    double e_lo = 0.0;
    double e_hi = 0.0;
    std::optional<int> target_count;  // keep only the first N states when set
};

enum class SeriesParity { even, odd, none };
std::string to_string(SeriesParity p);

struct EigenState {
    double energy = 0.0;
    SeriesParity parity = SeriesParity::none;
    ExpansionBasis basis;
    Eigen::MatrixXd coeffs;    // (q, k) block, unit Frobenius norm
    double norm_defect = 0.0;  // relative norm lost to truncation before rescaling
    double residual = 0.0;     // singular-value depth at the located energy
    int cluster = 0;           // shared non-zero id marks near-degenerate groups
};

struct SolverOptions {
    double tol = 1e-6;              // energy location tolerance
    double scan_step = 0.2;         // default scan; the triangle uses half of it
    double dip_threshold = 1e-4;    // relative acceptance for refined dips
    double basis_margin = 2.0;      // smallest unresolved mode >= margin * E
    int extra_modes = 16;           // evanescent-channel headroom
    int threads = 0;                // 0 = hardware concurrency
    double barrier_fraction = 0.5;  // Dirichlet fraction of the x = 0 edge
    bool keep_coefficients = true;
    int audit_retries = 2;          // rescans allowed to satisfy the count audit
};

// All eigenvalues in the window, sorted; coefficients in the half-integer
// cosine series. Throws std::runtime_error when the level-count audit cannot
// be satisfied, naming the sub-interval.
std::vector<EigenState> solve_barrier(const BilliardSpec& spec, const SpectralWindow& window,
                                      const SolverOptions& options = {});

// As solve_barrier for the pi/8 triangle; coefficients are the projection on
// the integer sine basis of the bounding rectangle (zero-extended).
std::vector<EigenState> solve_triangle(const BilliardSpec& spec, const SpectralWindow& window,
                                       const SolverOptions& options = {});

// Truncated-series values at the given points. Throws std::invalid_argument
// for a point outside the billiard.
std::vector<double> evaluate_state(const EigenState& state, const BilliardSpec& spec,
                                   std::span<const std::array<double, 2>> points);

// Coefficient-space inner product over the common (q, k) block.
double state_overlap(const EigenState& lhs, const EigenState& rhs);

// Smooth level-count increment between two energies (area + perimeter terms;
// the constant cancels in differences).
double weyl_increment(const BilliardSpec& spec, double e_lo, double e_hi,
                      double barrier_fraction = 0.5);

namespace detail {

// One boundary factorization at fixed energy, exposed for tests and for the
// width studies that track the dip depth directly. null_space holds the one
// or two trailing right singular vectors (channel or corner amplitudes).
struct Factorization {
    double sigma_min = 0.0;
    double sigma_next = 0.0;
    Eigen::MatrixXd null_space;
};
Factorization barrier_factorization(double energy, const BilliardSpec& spec,
                                    double barrier_fraction, int channels);
int barrier_channel_count(double e_hi, const BilliardSpec& spec, const SolverOptions& options);
Factorization triangle_factorization(double energy, const BilliardSpec& spec);

}  // namespace detail

}  // namespace superscar
