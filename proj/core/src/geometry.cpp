#include "superscar/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace superscar {

namespace {

std::int64_t checked_lcm(std::int64_t a, std::int64_t b) {
    return a / std::gcd(a, b) * b;
}

void validate_angles(const AngleSpec& spec) {
    if (spec.angles.empty()) throw std::invalid_argument("angle list is empty");
    for (const auto& c : spec.angles) {
        if (c.num < 1 || c.den < 1) throw std::invalid_argument("corner angle must be positive");
        if (std::gcd(c.num, c.den) != 1) throw std::invalid_argument("corner angle must be in lowest terms");
    }
}

}  // namespace

bool closes_simple_polygon(const AngleSpec& spec) {
    validate_angles(spec);
    const auto v = static_cast<std::int64_t>(spec.angles.size());
    if (v < 3) return false;
    // sum num_j/den_j == v - 2, exactly.
    std::int64_t den = 1;
    for (const auto& c : spec.angles) den = checked_lcm(den, c.den);
    std::int64_t num = 0;
    for (const auto& c : spec.angles) num += c.num * (den / c.den);
    return num == (v - 2) * den;
}

std::int64_t genus(const AngleSpec& spec) {
    validate_angles(spec);
    std::int64_t l = 1;
    for (const auto& c : spec.angles) l = checked_lcm(l, c.den);
    std::int64_t twice_excess = 0;  // L * sum (num_j - 1)/den_j
    for (const auto& c : spec.angles) twice_excess += (c.num - 1) * (l / c.den);
    if (twice_excess % 2 != 0) throw std::invalid_argument("angle list gives non-integer genus");
    const std::int64_t g = 1 + twice_excess / 2;
    if (g < 1) throw std::invalid_argument("angle list gives non-positive genus");
    return g;
}

double BilliardSpec::default_barrier_aspect() {
    return std::sqrt(std::sqrt(5.0) + 1.0);
}

BilliardSpec BilliardSpec::triangle(double area) {
    if (!(area > 0.0)) throw std::invalid_argument("triangle area must be positive");
    BilliardSpec s;
    s.kind_ = BilliardKind::triangle_pi8;
    const double t = std::tan(kPi / 8.0);
    s.a_ = std::sqrt(2.0 * area / t);  // area = a^2 tan(pi/8) / 2
    s.b_ = s.a_ * t;
    s.area_ = area;
    return s;
}

BilliardSpec BilliardSpec::barrier(double area, double aspect) {
    if (!(area > 0.0) || !(aspect > 0.0)) throw std::invalid_argument("barrier area and aspect must be positive");
    BilliardSpec s;
    s.kind_ = BilliardKind::barrier;
    s.a_ = std::sqrt(area / aspect);
    s.b_ = s.a_ * aspect;
    s.area_ = area;
    return s;
}

BilliardSpec BilliardSpec::rectangle(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
    BilliardSpec s;
    s.kind_ = BilliardKind::rectangle;
    s.a_ = a;
    s.b_ = b;
    s.area_ = a * b;
    return s;
}

BilliardSpec BilliardSpec::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "triangle_pi8") {
        return triangle(j.value("area", 4.0 * kPi));
    }
    if (kind == "barrier") {
        return barrier(j.value("area", 4.0 * kPi), j.value("aspect_ratio", default_barrier_aspect()));
    }
    if (kind == "rectangle") {
        const double area = j.value("area", 4.0 * kPi);
        const double aspect = j.value("aspect_ratio", 1.0);
        const double a = std::sqrt(area / aspect);
        return rectangle(a, a * aspect);
    }
    throw std::invalid_argument("unknown billiard kind: " + kind);
}

std::string BilliardSpec::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case BilliardKind::triangle_pi8: j["kind"] = "triangle_pi8"; break;
        case BilliardKind::barrier: j["kind"] = "barrier"; break;
        case BilliardKind::rectangle: j["kind"] = "rectangle"; break;
    }
    j["area"] = area_;
    j["aspect_ratio"] = b_ / a_;
    return j.dump();
}

std::vector<BoundarySegment> BilliardSpec::boundary_layout() const {
    const auto D = EdgeCondition::dirichlet;
    switch (kind_) {
        case BilliardKind::triangle_pi8:
            return {{0.0, 0.0, a_, 0.0, D}, {a_, 0.0, a_, b_, D}, {a_, b_, 0.0, 0.0, D}};
        case BilliardKind::barrier:
            return {{0.0, 0.0, a_, 0.0, D},
                    {a_, 0.0, a_, b_, D},
                    {a_, b_, 0.0, b_, D},
                    {0.0, b_, 0.0, b_ / 2.0, EdgeCondition::neumann},
                    {0.0, b_ / 2.0, 0.0, 0.0, D}};
        case BilliardKind::rectangle:
            return {{0.0, 0.0, a_, 0.0, D}, {a_, 0.0, a_, b_, D}, {a_, b_, 0.0, b_, D}, {0.0, b_, 0.0, 0.0, D}};
    }
    return {};
}

AngleSpec BilliardSpec::corner_angles() const {
    switch (kind_) {
        case BilliardKind::triangle_pi8:
            return {{{1, 8}, {1, 2}, {3, 8}}};
        case BilliardKind::barrier:
            // Four rectangle corners, two right angles where the barrier foot
            // meets the bottom edge, and the 2*pi tip of the slit.
            return {{{1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {2, 1}}};
        case BilliardKind::rectangle:
            return {{{1, 2}, {1, 2}, {1, 2}, {1, 2}}};
    }
    return {};
}

int crossing_count(int M, int N) {
    if (M < 1 || N < 0 || std::gcd(M, N) != 1) throw std::invalid_argument("crossing_count needs coprime M>=1, N>=0");
    int count = 0;
    for (int j = 0; j < M; ++j) {
        const std::int64_t r = (static_cast<std::int64_t>(N) * j) % M;  // frac = r/M
        if (4 * r >= M && 4 * r <= 3 * static_cast<std::int64_t>(M)) ++count;
    }
    return count;
}

namespace {

PeriodicOrbitPencil make_pencil(const BilliardSpec& spec, int M, int N, ParityRule rule) {
    PeriodicOrbitPencil p;
    p.M = M;
    p.N = N;
    const double dx = 2.0 * M * spec.a();
    const double dy = 2.0 * N * spec.b();
    p.L_p = std::hypot(dx, dy);
    p.w = 2.0 * spec.a() * spec.b() / p.L_p;
    p.theta = std::atan2(dy, dx);
    p.parity_rule = rule;
    if (M == 0) {
        p.width_class = WidthClass::single_w;
        p.pencil_offset = PencilOffset::centered;
        p.crossing_count = 0;
    } else if (M % 2 == 1) {
        p.width_class = WidthClass::single_w;
        p.pencil_offset = rule == ParityRule::m_even ? PencilOffset::centered : PencilOffset::shifted;
        p.crossing_count = crossing_count(M, N);
    } else {
        p.width_class = WidthClass::double_w;
        p.pencil_offset = M % 4 == 2 ? PencilOffset::centered : PencilOffset::shifted;
        p.crossing_count = crossing_count(M, N);
    }
    return p;
}

void emit(const BilliardSpec& spec, int M, int N, double L_max, std::vector<PeriodicOrbitPencil>& out) {
    const double L = std::hypot(2.0 * M * spec.a(), 2.0 * N * spec.b());
    if (L > L_max) return;
    if (M >= 1 && M % 2 == 1 && N >= 1) {
        out.push_back(make_pencil(spec, M, N, ParityRule::m_even));
        out.push_back(make_pencil(spec, M, N, ParityRule::m_odd));
    } else if (M == 0 || N == 0) {
        out.push_back(make_pencil(spec, M, N, ParityRule::m_even));
    } else {
        out.push_back(make_pencil(spec, M, N, ParityRule::m_odd_only));
    }
}

// Stern-Brocot descent over slopes N/M between (M1,N1) and (M2,N2); every
// visited pair is coprime and the mediant minimizes both M and N over its
// subtree, so L_p prunes exactly.
void stern_brocot(const BilliardSpec& spec, double L_max, int M1, int N1, int M2, int N2,
                  std::vector<PeriodicOrbitPencil>& out) {
    const int M = M1 + M2;
    const int N = N1 + N2;
    if (std::hypot(2.0 * M * spec.a(), 2.0 * N * spec.b()) > L_max) return;
    emit(spec, M, N, L_max, out);
    stern_brocot(spec, L_max, M1, N1, M, N, out);
    stern_brocot(spec, L_max, M, N, M2, N2, out);
}

}  // namespace

std::vector<PeriodicOrbitPencil> enumerate_pencils(const BilliardSpec& spec, double L_max) {
    if (!(L_max > 0.0)) throw std::invalid_argument("L_max must be positive");
    std::vector<PeriodicOrbitPencil> out;
    emit(spec, 0, 1, L_max, out);  // horizontal bouncing balls
    emit(spec, 1, 0, L_max, out);  // vertical bouncing balls (DD/DN structure lives downstream)
    stern_brocot(spec, L_max, 0, 1, 1, 0, out);
    std::stable_sort(out.begin(), out.end(), [](const PeriodicOrbitPencil& x, const PeriodicOrbitPencil& y) {
        if (x.L_p != y.L_p) return x.L_p < y.L_p;
        if (x.M != y.M) return x.M < y.M;
        return static_cast<int>(x.parity_rule) < static_cast<int>(y.parity_rule);
    });
    return out;
}

double max_channel_length(double k, const BilliardSpec& spec, double lambda0, double gamma) {
    if (!(k > 0.0)) throw std::invalid_argument("momentum must be positive");
    const double delta = std::pow(spec.area() * lambda0 * gamma / std::sqrt(kPi), 2.0 / 3.0);
    return delta * std::cbrt(k);
}

PencilFramePoint to_pencil_frame(const PeriodicOrbitPencil& pencil, double x, double y) {
    const double c = std::cos(pencil.theta);
    const double s = std::sin(pencil.theta);
    return {x * c + y * s, -x * s + y * c};
}

void from_pencil_frame(const PeriodicOrbitPencil& pencil, double xi, double eta, double& x, double& y) {
    const double c = std::cos(pencil.theta);
    const double s = std::sin(pencil.theta);
    x = xi * c - eta * s;
    y = xi * s + eta * c;
}

double eta_singular(const PeriodicOrbitPencil& pencil, int alpha, int beta) {
    return pencil.w * (-2.0 * alpha * pencil.N + beta * pencil.M + pencil.M / 2.0);
}

double singular_vertex_spacing(const PeriodicOrbitPencil& pencil) {
    if (pencil.M == 0 || pencil.N == 0) return pencil.L_p / 2.0;
    return pencil.M % 2 == 1 ? pencil.L_p : pencil.L_p / 2.0;
}

const char* to_string(WidthClass c) {
    return c == WidthClass::single_w ? "single_w" : "double_w";
}

const char* to_string(ParityRule r) {
    switch (r) {
        case ParityRule::m_even: return "m_even";
        case ParityRule::m_odd: return "m_odd";
        default: return "m_odd_only";
    }
}

std::string pencils_to_csv(std::span<const PeriodicOrbitPencil> pencils) {
    std::ostringstream os;
    os << "M,N,L_p,w,width_class,parity_rule,crossing_count\n";
    os.precision(17);
    for (const auto& p : pencils) {
        os << p.M << ',' << p.N << ',' << p.L_p << ',' << p.w << ',' << to_string(p.width_class) << ','
           << to_string(p.parity_rule) << ',' << p.crossing_count << '\n';
    }
    return os.str();
}

}  // namespace superscar
