#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace rdyn {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// A state (z, x1, x2) in linearized coordinates: z expands, x1 is the weak
// and x2 the strong contracting coordinate.
struct Point {
    double z{0.0};
    double x1{0.0};
    double x2{0.0};

    friend bool operator==(const Point&, const Point&) = default;
};

struct Box3 {
    double z_lo{0.0}, z_hi{0.0};
    double x1_lo{0.0}, x1_hi{0.0};
    double x2_lo{0.0}, x2_hi{0.0};

    bool contains(const Point& p) const {
        return p.z >= z_lo && p.z <= z_hi && p.x1 >= x1_lo && p.x1 <= x1_hi &&
               p.x2 >= x2_lo && p.x2 <= x2_hi;
    }
    bool contains(const Box3& o) const {
        return o.z_lo >= z_lo && o.z_hi <= z_hi && o.x1_lo >= x1_lo &&
               o.x1_hi <= x1_hi && o.x2_lo >= x2_lo && o.x2_hi <= x2_hi;
    }
    bool disjoint(const Box3& o) const {
        return o.z_hi < z_lo || o.z_lo > z_hi || o.x1_hi < x1_lo ||
               o.x1_lo > x1_hi || o.x2_hi < x2_lo || o.x2_lo > x2_hi;
    }
    Box3 inflated(double d) const {
        return {z_lo - d, z_hi + d, x1_lo - d, x1_hi + d, x2_lo - d, x2_hi + d};
    }
};

struct RegionGeometry {
    Box3 L_box;
    Box3 Qprime_box;
    Box3 Q_box;
    Box3 R_box;
    Box3 U_box;
    double zeta{0.05}; // annulus width around R
};

// Optional coefficients for the higher-order remainders of the fold map.
// The monomials are chosen so the tangency/unfolding normalization holds
// identically: h = h_z3*z^3 + h_t2*t^2 + h_x1sq*x1^2 + h_x2sq*x2^2 and
// H_i = Hi_z2*z^2 + Hi_t2*t^2.
struct HigherOrder {
    double h_z3{0.0}, h_t2{0.0}, h_x1sq{0.0}, h_x2sq{0.0};
    double H1_z2{0.0}, H2_z2{0.0};
    double H1_t2{0.0}, H2_t2{0.0};

    bool all_zero() const {
        return h_z3 == 0 && h_t2 == 0 && h_x1sq == 0 && h_x2sq == 0 &&
               H1_z2 == 0 && H2_z2 == 0 && H1_t2 == 0 && H2_t2 == 0;
    }
};

struct ModelParams {
    double sigma{2.0};    // expanding eigenvalue, > 1
    double lambda1{0.4};  // weak contracting eigenvalue
    double lambda2{0.35}; // strong contracting eigenvalue
    double a{0.12};       // fold curvature
    Vec2 A{0.05, 0.08};   // unfolding direction
    Vec2 B{0.6, 0.45};    // tangent of W^u at q
    Vec2 b{0.25, 0.1};    // linear functional on X in the z component
    Mat2 C{{{0.05, -0.38}, {0.36, 0.07}}};
    Vec2 q0{1.0, 1.0};    // image base point of the fold
    HigherOrder higher_order{};
    double t_star{0.1};   // unfolding window bound
    RegionGeometry regions{};
};

enum class RegionLabel {
    InR,
    InQ,
    InQprimeOnly,
    InAnnulus,
    InUOnly,
    InLOnly,
    Outside,
};

const char* to_string(RegionLabel label);

struct ValidationIssue {
    std::string check;   // the violated inequality or constraint
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

// Checks the eigenvalue conditions (sectional dissipativity, least
// contracting eigenvalue), the tangency/transversality coefficients and
// the region layout.
ValidationReport validate_params(const ModelParams& p);

// Labels under the fixed precedence InR > InQ > InQprimeOnly > InAnnulus >
// InUOnly > InLOnly > Outside.
RegionLabel classify(const ModelParams& p, const Point& x);

// One step of the random map: the fold from R, the linear saddle action on
// the rest of L, and nullopt once the orbit leaves the modeled region.
// Escape is an outcome, not an error.
std::optional<Point> step(const ModelParams& p, const Point& x, double t);

// Exact derivative of step with respect to the point.
// Precondition: step(p, x, t) does not escape.
Mat3 jacobian(const ModelParams& p, const Point& x, double t);

// Derivative of step with respect to the parameter t.
std::array<double, 3> t_derivative(const ModelParams& p, const Point& x, double t);

struct TangentVector {
    double u0{0.0}; // z direction
    double u1{0.0};
    double u2{0.0};
};

// |u0| / max(|u1|, |u2|), +inf when the denominator vanishes.
// Throws std::invalid_argument on the zero vector.
double slope(const TangentVector& v);

double norm_max(const TangentVector& v);
double norm_euclid(const TangentVector& v);

// Angle in radians via the standard inner product in linearized coordinates.
double angle_to(const TangentVector& v, const TangentVector& w);

TangentVector apply(const Mat3& m, const TangentVector& v);

// The shipped default model: recurrent near the tangency for the default
// noise window, with all validation constraints satisfied.
ModelParams default_params();

inline Point saddle_point() { return {0.0, 0.0, 0.0}; }
inline Point tangency_point() { return {0.0, 1.0, 1.0}; }
inline Point fold_base_point() { return {1.0, 0.0, 0.0}; }

} // namespace rdyn
