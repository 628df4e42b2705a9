#include "superscar/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spectral_scan.hpp"
#include "superscar/numerics.hpp"

namespace superscar {

std::string to_string(SeriesParity p) {
    switch (p) {
        case SeriesParity::even: return "even";
        case SeriesParity::odd: return "odd";
        case SeriesParity::none: return "n/a";
    }
    return "?";
}

std::vector<double> evaluate_state(const EigenState& state, const BilliardSpec& spec,
                                   std::span<const std::array<double, 2>> points) {
    const double a = spec.a(), b = spec.b();
    const double eps = 1e-9 * std::max(a, b);
    std::vector<double> values;
    values.reserve(points.size());
    for (const auto& p : points) {
        const double x = p[0], y = p[1];
        bool inside = x >= -eps && x <= a + eps && y >= -eps && y <= b + eps;
        if (spec.kind() == BilliardKind::triangle_pi8)
            inside = inside && y <= x * (b / a) + eps;
        if (!inside) throw std::invalid_argument("evaluate_state: point outside the billiard");
        values.push_back(evaluate_series(state.coeffs, state.basis, x, y));
    }
    return values;
}

double state_overlap(const EigenState& lhs, const EigenState& rhs) {
    if (lhs.basis.kind != rhs.basis.kind || std::abs(lhs.basis.a - rhs.basis.a) > 1e-12 ||
        std::abs(lhs.basis.b - rhs.basis.b) > 1e-12)
        throw std::invalid_argument("state_overlap: incompatible bases");
    const int q = std::min(lhs.basis.q_max, rhs.basis.q_max);
    const int k = std::min(lhs.basis.k_max, rhs.basis.k_max);
    return lhs.coeffs.topLeftCorner(q, k).cwiseProduct(rhs.coeffs.topLeftCorner(q, k)).sum();
}

double weyl_increment(const BilliardSpec& spec, double e_lo, double e_hi,
                      double barrier_fraction) {
    double area = spec.area();
    double p_dir = 0.0, p_neu = 0.0;
    const double a = spec.a(), b = spec.b();
    switch (spec.kind()) {
        case BilliardKind::barrier:
            p_dir = 2.0 * a + b + barrier_fraction * b;
            p_neu = (1.0 - barrier_fraction) * b;
            break;
        case BilliardKind::rectangle:
            p_dir = 2.0 * (a + b);
            break;
        case BilliardKind::triangle_pi8:
            p_dir = a + b + std::hypot(a, b);
            break;
    }
    const auto smooth = [&](double e) {
        return (area / (4.0 * kPi)) * e - (p_dir - p_neu) / (4.0 * kPi) * std::sqrt(e);
    };
    return smooth(e_hi) - smooth(e_lo);
}

namespace detail {

std::vector<Dip> scan_window(const std::function<std::pair<double, double>(double)>& sigma2,
                             const ScanConfig& config) {
    if (!(config.e_lo > 0.0) || !(config.e_hi > config.e_lo))
        throw std::invalid_argument("scan_window: need 0 < e_lo < e_hi");
    const double chunk_width = 5.0;
    const int n_chunks =
        std::max(1, static_cast<int>(std::ceil((config.e_hi - config.e_lo) / chunk_width)));
    std::vector<std::vector<Dip>> found(n_chunks);
    parallel_for(n_chunks, config.threads, [&](std::size_t c) {
        const double lo = config.e_lo + (config.e_hi - config.e_lo) * c / n_chunks;
        const double hi = config.e_lo + (config.e_hi - config.e_lo) * (c + 1) / n_chunks;
        // one grid node beyond each edge so boundary minima get a bracket
        const int n = static_cast<int>(std::ceil((hi - lo) / config.step)) + 1;
        std::vector<double> grid(n + 2), sig(n + 2);
        for (int i = 0; i < n + 2; ++i) {
            grid[i] = std::max(0.5 * config.e_lo, lo + (i - 1) * config.step);
            sig[i] = sigma2(grid[i]).first;
        }
        const bool last = (c + 1 == static_cast<std::size_t>(n_chunks));
        const double margin = 1.6 * config.step;
        const auto in_chunk = [&](double e, double pad) {
            const double lo_eff = std::max(lo - pad, config.e_lo);
            const double hi_eff = std::min(hi + pad, config.e_hi);
            if (e < lo_eff) return false;
            if (e < hi_eff) return true;
            return (last || hi + pad > config.e_hi) && e <= config.e_hi + config.tol;
        };
        std::vector<Dip>& out = found[c];
        std::vector<double> work;
        const auto refine_bracket = [&](double b_lo, double b_hi, double pad) {
            const double e_ref = golden_minimize([&](double e) { return sigma2(e).first; },
                                                 b_lo, b_hi, config.tol);
            const auto [s0, s1] = sigma2(e_ref);
            if (!(s0 < config.accept) || !in_chunk(e_ref, pad)) return;
            for (const auto& d : out)
                if (std::abs(d.energy - e_ref) < 5.0 * config.tol) return;
            out.push_back({e_ref, s0, s1});
            work.push_back(e_ref);
        };
        for (int i = 1; i <= n; ++i)
            if (sig[i] < sig[i - 1] && sig[i] < sig[i + 1])
                refine_bracket(grid[i - 1], grid[i + 1], 0.0);
        // A level close to a deeper neighbor can leave no coarse-grid minimum
        // of its own (each successive node is nearer to some level, so the
        // samples pass it monotonically). Any such level hides within a couple
        // of steps of a found one, so rescan around every accepted dip finely,
        // chaining outward as partners turn up.
        for (std::size_t w = 0; w < work.size(); ++w) {
            const double fine = config.step / 10.0;
            const double f_lo = std::max(0.5 * config.e_lo, work[w] - margin);
            const int m = static_cast<int>(std::ceil((work[w] + margin - f_lo) / fine));
            std::vector<double> fg(m + 1), fs(m + 1);
            for (int j = 0; j <= m; ++j) {
                fg[j] = f_lo + j * fine;
                fs[j] = sigma2(fg[j]).first;
            }
            for (int j = 1; j < m; ++j)
                if (fs[j] < fs[j - 1] && fs[j] < fs[j + 1])
                    refine_bracket(fg[j - 1], fg[j + 1], margin);
        }
    });
    std::vector<Dip> dips;
    for (auto& f : found) dips.insert(dips.end(), f.begin(), f.end());
    std::sort(dips.begin(), dips.end(), [](const Dip& l, const Dip& r) { return l.energy < r.energy; });
    std::vector<Dip> unique;
    for (const auto& d : dips) {
        if (!unique.empty() && d.energy - unique.back().energy < 5.0 * config.tol) {
            if (d.sigma < unique.back().sigma) unique.back() = d;
        } else {
            unique.push_back(d);
        }
    }
    return unique;
}

void merge_dips(std::vector<Dip>& base, const std::vector<Dip>& extra, double merge_tol) {
    for (const auto& d : extra) {
        const auto near = std::find_if(base.begin(), base.end(), [&](const Dip& x) {
            return std::abs(x.energy - d.energy) < merge_tol;
        });
        if (near == base.end()) base.push_back(d);
    }
    std::sort(base.begin(), base.end(), [](const Dip& l, const Dip& r) { return l.energy < r.energy; });
}

}  // namespace detail
}  // namespace superscar
