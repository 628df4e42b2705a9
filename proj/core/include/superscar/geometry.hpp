#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace superscar {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Corner angle as an exact rational multiple of pi: angle = num*pi/den, coprime.
struct CornerAngle {
    std::int64_t num = 1;
    std::int64_t den = 1;
};

// Ordered corner angles of a rational polygon.
struct AngleSpec {
    std::vector<CornerAngle> angles;
};

// True when the angles can close a simple polygon: sum = (V-2)*pi, checked in
// exact rational arithmetic.
bool closes_simple_polygon(const AngleSpec& spec);

// Genus of the translation surface obtained by unfolding a rational polygon
// with angles num_j*pi/den_j:  g = 1 + (L/2) * sum_j (num_j - 1)/den_j, where
// L = lcm of all den_j. Exact integer arithmetic; throws std::invalid_argument
// when the result is not a positive integer (inconsistent angle list) or when
// an angle is invalid.
std::int64_t genus(const AngleSpec& spec);

enum class BilliardKind { triangle_pi8, barrier, rectangle };
enum class EdgeCondition { dirichlet, neumann };

// Straight boundary piece with its boundary condition.
struct BoundarySegment {
    double x0, y0, x1, y1;
    EdgeCondition condition;
};

// The two billiards studied here plus the plain rectangle used as a control:
//  - triangle_pi8: right triangle, catheti a (horizontal) and b = a*tan(pi/8),
//    vertices (0,0), (a,0), (a,b); all edges Dirichlet; area = a*b/2.
//  - barrier: rectangle (0,a)x(0,b) with Dirichlet everywhere except a Neumann
//    segment at x=0 for b/2 < y < b; the Dirichlet piece of x=0 below b/2 is
//    the barrier. Default aspect b/a = sqrt(sqrt(5)+1); area = a*b.
//  - rectangle: all-Dirichlet a x b box (barrier of height zero, for tests).
class BilliardSpec {
public:
    static BilliardSpec triangle(double area = 4.0 * kPi);
    static BilliardSpec barrier(double area = 4.0 * kPi, double aspect = default_barrier_aspect());
    static BilliardSpec rectangle(double a, double b);

    // Config text: {"kind": "...", "area": ..., "aspect_ratio": ...}.
    static BilliardSpec from_json(const std::string& text);
    std::string to_json() const;

    BilliardKind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double area() const { return area_; }

    std::vector<BoundarySegment> boundary_layout() const;
    AngleSpec corner_angles() const;

    static double default_barrier_aspect();  // sqrt(sqrt(5)+1)

private:
    BilliardKind kind_ = BilliardKind::rectangle;
    double a_ = 1.0;
    double b_ = 1.0;
    double area_ = 1.0;
};

enum class WidthClass { single_w, double_w };
enum class PencilOffset { centered, shifted };
enum class ParityRule { m_even, m_odd, m_odd_only };

const char* to_string(WidthClass c);
const char* to_string(ParityRule r);

// Family of parallel periodic orbits of the barrier billiard with direction
// (2Ma, 2Nb). Odd M carries two pencils of base width w distinguished by the
// longitudinal parity; even M carries one pencil of width 2w, centered for
// M = 2 mod 4 and shifted through the singular points for M = 0 mod 4.
// The degenerate bouncing-ball families (0,1) and (1,0) get base fields here;
// their sub-structure (horizontal / DD / DN waves) lives in the quasimode
// layer.
struct PeriodicOrbitPencil {
    int M = 0;
    int N = 0;
    double L_p = 0.0;  // sqrt((2Ma)^2 + (2Nb)^2)
    double w = 0.0;    // base width 2ab/L_p
    WidthClass width_class = WidthClass::single_w;
    PencilOffset pencil_offset = PencilOffset::centered;
    ParityRule parity_rule = ParityRule::m_even;
    double theta = 0.0;  // cos(theta) = 2Ma/L_p, sin(theta) = 2Nb/L_p
    int crossing_count = 0;

    double effective_width() const { return width_class == WidthClass::double_w ? 2.0 * w : w; }
};

// All coprime (M,N), M,N >= 0, with L_p <= L_max, fields populated, sorted by
// L_p (odd M emits its two parity pencils). Walks the Stern-Brocot tree so
// coprimality is structural, with (0,1) and (1,0) seeded explicitly.
std::vector<PeriodicOrbitPencil> enumerate_pencils(const BilliardSpec& spec, double L_max);

// Number of crossings of the unfolded orbit with the barrier intervals:
// N(M) = sum_{j=0}^{M-1} [ frac(N j / M) in [1/4, 3/4] ], evaluated in exact
// integer arithmetic with inclusive endpoints (the outward micro-shift that
// makes the count well defined when M = 0 mod 4). Even for odd M, odd for
// even M. Requires gcd(M,N)=1, M >= 1.
int crossing_count(int M, int N);

// Longest open channel at momentum k: L_max = delta * k^(1/3) with
// delta = (area * lambda0 * gamma / sqrt(pi))^(2/3).
double max_channel_length(double k, const BilliardSpec& spec, double lambda0, double gamma);

struct PencilFramePoint {
    double xi;
    double eta;
};

// Rotation into the pencil frame: xi along the orbit, eta transverse.
PencilFramePoint to_pencil_frame(const PeriodicOrbitPencil& pencil, double x, double y);
void from_pencil_frame(const PeriodicOrbitPencil& pencil, double xi, double eta, double& x, double& y);

// Transverse offset of the unfolded singular point indexed by (alpha, beta):
// eta_s = w * (-2*alpha*N + beta*M + M/2).
double eta_singular(const PeriodicOrbitPencil& pencil, int alpha, int beta);

// Spacing of singular vertices along a pencil boundary line (enters the decay
// width prediction): L_p for odd M, L_p/2 for even M.
double singular_vertex_spacing(const PeriodicOrbitPencil& pencil);

// CSV export: header M,N,L_p,w,width_class,parity_rule,crossing_count.
std::string pencils_to_csv(std::span<const PeriodicOrbitPencil> pencils);

}  // namespace superscar
