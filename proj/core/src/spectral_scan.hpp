#pragma once

// Internal: energy-window dip scanning shared by the two solvers. A solver
// provides sigma2(E) = (smallest, second-smallest) singular value; dips are
// grid local minima refined by golden section and kept below an acceptance
// depth. Chunked for concurrency; deterministic for any thread count.

#include <functional>
#include <utility>
#include <vector>

namespace superscar::detail {

struct Dip {
    double energy = 0.0;
    double sigma = 0.0;
    double sigma_next = 0.0;
};

struct ScanConfig {
    double e_lo = 0.0;
    double e_hi = 0.0;
    double step = 0.2;
    double tol = 1e-6;     // energy refinement tolerance
    double accept = 1e-4;  // keep dips with sigma below this
    int threads = 0;
};

std::vector<Dip> scan_window(const std::function<std::pair<double, double>(double)>& sigma2,
                             const ScanConfig& config);

// Merge extra dips into base, dropping duplicates closer than merge_tol.
void merge_dips(std::vector<Dip>& base, const std::vector<Dip>& extra, double merge_tol);

}  // namespace superscar::detail
