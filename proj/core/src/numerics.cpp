#include "superscar/numerics.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace superscar {

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    QuadratureRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi-style initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[i] = -x;
        rule.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    return rule;
}

QuadratureRule mapped_rule(const QuadratureRule& rule, double a, double b) {
    QuadratureRule out;
    const std::size_t n = rule.x.size();
    out.x.resize(n);
    out.w.resize(n);
    const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
    for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = mid + rad * rule.x[i];
        out.w[i] = rad * rule.w[i];
    }
    return out;
}

namespace {

// Maclaurin series for erf, accumulated in long double to keep the
// cancellation near |z| ~ 4 below 1e-12.
std::complex<double> erf_series(std::complex<double> z) {
    const std::complex<long double> zl(z.real(), z.imag());
    const std::complex<long double> z2 = zl * zl;
    std::complex<long double> term = zl;
    std::complex<long double> sum = zl;
    for (int n = 1; n < 200; ++n) {
        term *= -z2 / static_cast<long double>(n);
        const std::complex<long double> add = term / static_cast<long double>(2 * n + 1);
        sum += add;
        if (std::abs(add) < 1e-20L * std::abs(sum) + 1e-25L) break;
    }
    const long double two_over_sqrt_pi = 1.1283791670955125738961589L;
    sum *= two_over_sqrt_pi;
    return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

// Modified Lentz continued fraction for w(z), valid for Im z > 0 and |z|
// large enough that the fraction converges quickly (used for |z| > 4 here).
std::complex<double> faddeeva_cf(std::complex<double> z) {
    const std::complex<double> i_unit(0.0, 1.0);
    const double tiny = 1e-300;
    std::complex<double> f = tiny, C = f, D = 0.0;
    // w(z) = (i/sqrt(pi)) / (z - 1/2/(z - 1/(z - 3/2/(z - ...))))
    // Evaluate with Lentz using a_1 = i/sqrt(pi), a_{k>=2} = -(k-1)/2, b_k = z.
    for (int k = 1; k <= 200; ++k) {
        std::complex<double> a =
            (k == 1) ? i_unit / std::sqrt(std::numbers::pi) : -0.5 * (k - 1);
        D = z + a * D;
        if (std::abs(D) < tiny) D = tiny;
        C = z + a / C;
        if (std::abs(C) < tiny) C = tiny;
        D = 1.0 / D;
        const std::complex<double> delta = C * D;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return f;
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
    if (z.imag() < 0.0)
        throw std::invalid_argument("faddeeva: implemented for Im z >= 0");
    if (std::abs(z) <= 4.0) {
        // w(z) = e^{-z^2} (1 - erf(-iz))
        const std::complex<double> miz(z.imag(), -z.real());
        return std::exp(-z * z) * (1.0 - erf_series(miz));
    }
    return faddeeva_cf(z);
}

std::complex<double> erfc_complex(std::complex<double> z) {
    if (z.real() < 0.0) return 2.0 - erfc_complex(-z);
    // erfc(z) = e^{-z^2} w(iz); iz has non-negative imaginary part here.
    const std::complex<double> iz(-z.imag(), z.real());
    return std::exp(-z * z) * faddeeva(iz);
}

double golden_minimize(const std::function<double(double)>& f, double a, double b,
                       double xtol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need matching samples, n >= 2");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.slope * x[i] - fit.intercept;
        ss += r * r;
    }
    if (x.size() > 2)
        fit.slope_stderr = std::sqrt(ss / (n - 2.0) * n / denom);
    return fit;
}

std::vector<double> fit_curve(
    const std::function<double(std::span<const double>, double)>& model,
    std::span<const double> x, std::span<const double> y,
    std::span<const double> weights, std::vector<double> initial,
    int max_iterations) {
    if (x.size() != y.size())
        throw std::invalid_argument("fit_curve: sample size mismatch");
    if (!weights.empty() && weights.size() != x.size())
        throw std::invalid_argument("fit_curve: weight size mismatch");
    const int m = static_cast<int>(x.size());
    const int p = static_cast<int>(initial.size());
    Eigen::VectorXd params = Eigen::Map<Eigen::VectorXd>(initial.data(), p);

    auto residuals = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(m);
        std::vector<double> qs(q.data(), q.data() + p);
        for (int i = 0; i < m; ++i) {
            const double wgt = weights.empty() ? 1.0 : std::sqrt(weights[i]);
            r(i) = wgt * (model(qs, x[i]) - y[i]);
        }
        return r;
    };

    double lambda = 1e-3;
    Eigen::VectorXd r = residuals(params);
    double cost = r.squaredNorm();
    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::MatrixXd J(m, p);
        for (int j = 0; j < p; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(params(j)));
            Eigen::VectorXd q = params;
            q(j) += h;
            J.col(j) = (residuals(q) - r) / h;
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd Jtr = J.transpose() * r;
        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = A.ldlt().solve(-Jtr);
            const Eigen::VectorXd trial = params + step;
            const Eigen::VectorXd rt = residuals(trial);
            const double trial_cost = rt.squaredNorm();
            if (trial_cost < cost) {
                params = trial;
                r = rt;
                const double gain = cost - trial_cost;
                cost = trial_cost;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (gain < 1e-14 * (cost + 1e-14)) iter = max_iterations;
                break;
            }
            lambda *= 8.0;
        }
        if (!accepted) break;
    }
    return {params.data(), params.data() + p};
}

std::vector<double> bessel_j_sequence(double x, int n_max) {
    if (n_max < 0) throw std::invalid_argument("bessel_j_sequence: n_max < 0");
    if (x < 0) throw std::invalid_argument("bessel_j_sequence: x < 0");
    std::vector<double> j(n_max + 1, 0.0);
    if (x == 0.0) {
        j[0] = 1.0;
        return j;
    }
    // Start the downward recurrence well above max(n_max, x); the headroom
    // controls the relative error of the largest retained order.
    const int start = static_cast<int>(std::max<double>(n_max, x)) + 16 +
                      static_cast<int>(2.0 * std::sqrt(std::max(n_max + 1.0, x)));
    std::vector<long double> f(start + 2, 0.0L);
    f[start + 1] = 0.0L;
    f[start] = 1e-300L;
    for (int k = start; k >= 1; --k) {
        f[k - 1] = (2.0L * k) / x * f[k] - f[k + 1];
        if (std::abs(static_cast<double>(f[k - 1])) > 1e280) {
            for (int i = k - 1; i <= start + 1; ++i) f[i] *= 1e-280L;
        }
    }
    long double norm = f[0];
    for (int k = 2; k <= start; k += 2) norm += 2.0L * f[k];
    for (int k = 0; k <= n_max; ++k) j[k] = static_cast<double>(f[k] / norm);
    return j;
}

void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const unsigned hw = std::thread::hardware_concurrency();
    int workers = n_threads > 0 ? n_threads : static_cast<int>(hw ? hw : 1);
    workers = static_cast<int>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace superscar
