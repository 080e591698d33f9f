#include "rdyn/model.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace rdyn {

namespace {

void require(ValidationReport& rep, bool ok, const std::string& check,
             const std::string& detail) {
    if (!ok) rep.issues.push_back({check, detail});
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

const char* to_string(RegionLabel label) {
    switch (label) {
        case RegionLabel::InR: return "InR";
        case RegionLabel::InQ: return "InQ";
        case RegionLabel::InQprimeOnly: return "InQprimeOnly";
        case RegionLabel::InAnnulus: return "InAnnulus";
        case RegionLabel::InUOnly: return "InUOnly";
        case RegionLabel::InLOnly: return "InLOnly";
        case RegionLabel::Outside: return "Outside";
    }
    return "?";
}

ValidationReport validate_params(const ModelParams& p) {
    ValidationReport rep;

    require(rep, p.sigma > 1.0, "sigma > 1", "sigma = " + fmt(p.sigma));
    require(rep, p.lambda1 != 0.0 && std::abs(p.lambda1) < 1.0,
            "0 < |lambda1| < 1", "lambda1 = " + fmt(p.lambda1));
    require(rep, p.lambda2 != 0.0 && std::abs(p.lambda2) < 1.0,
            "0 < |lambda2| < 1", "lambda2 = " + fmt(p.lambda2));
    require(rep, std::abs(p.sigma * p.lambda1) < 1.0, "|sigma*lambda1| < 1",
            "|sigma*lambda1| = " + fmt(std::abs(p.sigma * p.lambda1)));
    require(rep, std::abs(p.sigma * p.lambda2) < 1.0, "|sigma*lambda2| < 1",
            "|sigma*lambda2| = " + fmt(std::abs(p.sigma * p.lambda2)));
    require(rep, std::abs(p.lambda1) > std::abs(p.lambda2),
            "|lambda1| > |lambda2|",
            "|lambda1| = " + fmt(std::abs(p.lambda1)) +
                ", |lambda2| = " + fmt(std::abs(p.lambda2)));
    require(rep, p.a != 0.0, "a != 0", "fold curvature must be nonzero");
    require(rep, p.B[0] != 0.0, "B1 != 0", "transversality of B");
    require(rep, p.B[1] != 0.0, "B2 != 0",
            "det(A,B,D) = -B2 must be nonzero");
    require(rep, p.b[0] != 0.0 || p.b[1] != 0.0, "b != 0",
            "linear functional b must be nonzero");
    require(rep, p.t_star > 0.0, "t_star > 0", "t_star = " + fmt(p.t_star));

    const RegionGeometry& g = p.regions;
    require(rep, g.Qprime_box.contains(g.Q_box), "Q_box subset of Qprime_box", "");
    require(rep, g.U_box.contains(g.R_box), "R_box subset of U_box", "");
    require(rep, g.L_box.contains(Box3{-2, 2, -2, 2, -2, 2}),
            "L_box covers [-2,2]^3", "");
    require(rep, g.U_box.disjoint(g.Q_box), "U_box disjoint from Q_box", "");
    require(rep, g.zeta > 0.0, "zeta > 0", "zeta = " + fmt(g.zeta));
    require(rep, g.U_box.contains(g.R_box.inflated(g.zeta)),
            "annulus inside U_box",
            "zeta-neighborhood of R_box must stay in U_box");
    require(rep, g.L_box.contains(saddle_point()), "saddle p in L_box", "");
    require(rep, g.Q_box.contains(tangency_point()), "q = (0,1,1) in Q_box", "");
    require(rep, g.R_box.contains(fold_base_point()), "r = (1,0,0) in R_box", "");

    return rep;
}

RegionLabel classify(const ModelParams& p, const Point& x) {
    const RegionGeometry& g = p.regions;
    if (g.R_box.contains(x)) return RegionLabel::InR;
    if (g.Q_box.contains(x)) return RegionLabel::InQ;
    if (g.Qprime_box.contains(x)) return RegionLabel::InQprimeOnly;
    if (g.R_box.inflated(g.zeta).contains(x) && g.U_box.contains(x))
        return RegionLabel::InAnnulus;
    if (g.U_box.contains(x)) return RegionLabel::InUOnly;
    if (g.L_box.contains(x)) return RegionLabel::InLOnly;
    return RegionLabel::Outside;
}

std::optional<Point> step(const ModelParams& p, const Point& x, double t) {
    if (p.regions.R_box.contains(x)) {
        // Fold map R -> Q': write x = (1 + z, X).
        const double z = x.z - 1.0;
        const HigherOrder& ho = p.higher_order;
        const double h = ho.h_z3 * z * z * z + ho.h_t2 * t * t +
                         ho.h_x1sq * x.x1 * x.x1 + ho.h_x2sq * x.x2 * x.x2;
        const double H1 = ho.H1_z2 * z * z + ho.H1_t2 * t * t;
        const double H2 = ho.H2_z2 * z * z + ho.H2_t2 * t * t;
        Point out;
        out.z = t + p.a * z * z + p.b[0] * x.x1 + p.b[1] * x.x2 + h;
        out.x1 = p.q0[0] + p.A[0] * t + p.B[0] * z + p.C[0][0] * x.x1 +
                 p.C[0][1] * x.x2 + H1;
        out.x2 = p.q0[1] + p.A[1] * t + p.B[1] * z + p.C[1][0] * x.x1 +
                 p.C[1][1] * x.x2 + H2;
        return out;
    }
    if (p.regions.L_box.contains(x)) {
        return Point{p.sigma * x.z, p.lambda1 * x.x1, p.lambda2 * x.x2};
    }
    return std::nullopt; // escaped the modeled region
}

Mat3 jacobian(const ModelParams& p, const Point& x, double t) {
    if (p.regions.R_box.contains(x)) {
        const double z = x.z - 1.0;
        const HigherOrder& ho = p.higher_order;
        return Mat3{{
            {2.0 * p.a * z + 3.0 * ho.h_z3 * z * z,
             p.b[0] + 2.0 * ho.h_x1sq * x.x1, p.b[1] + 2.0 * ho.h_x2sq * x.x2},
            {p.B[0] + 2.0 * ho.H1_z2 * z, p.C[0][0], p.C[0][1]},
            {p.B[1] + 2.0 * ho.H2_z2 * z, p.C[1][0], p.C[1][1]},
        }};
    }
    if (p.regions.L_box.contains(x)) {
        return Mat3{{{p.sigma, 0, 0}, {0, p.lambda1, 0}, {0, 0, p.lambda2}}};
    }
    throw std::invalid_argument("jacobian: point escaped the modeled region");
}

std::array<double, 3> t_derivative(const ModelParams& p, const Point& x, double t) {
    if (p.regions.R_box.contains(x)) {
        const HigherOrder& ho = p.higher_order;
        return {1.0 + 2.0 * ho.h_t2 * t, p.A[0] + 2.0 * ho.H1_t2 * t,
                p.A[1] + 2.0 * ho.H2_t2 * t};
    }
    if (p.regions.L_box.contains(x)) {
        return {0.0, 0.0, 0.0}; // linear part is constant in t
    }
    throw std::invalid_argument("t_derivative: point escaped the modeled region");
}

double slope(const TangentVector& v) {
    const double num = std::abs(v.u0);
    const double den = std::max(std::abs(v.u1), std::abs(v.u2));
    if (num == 0.0 && den == 0.0)
        throw std::invalid_argument("slope: zero vector");
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

double norm_max(const TangentVector& v) {
    return std::max({std::abs(v.u0), std::abs(v.u1), std::abs(v.u2)});
}

double norm_euclid(const TangentVector& v) {
    return std::sqrt(v.u0 * v.u0 + v.u1 * v.u1 + v.u2 * v.u2);
}

double angle_to(const TangentVector& v, const TangentVector& w) {
    const double nv = norm_euclid(v);
    const double nw = norm_euclid(w);
    if (nv == 0.0 || nw == 0.0)
        throw std::invalid_argument("angle_to: zero vector");
    double c = (v.u0 * w.u0 + v.u1 * w.u1 + v.u2 * w.u2) / (nv * nw);
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

TangentVector apply(const Mat3& m, const TangentVector& v) {
    return {m[0][0] * v.u0 + m[0][1] * v.u1 + m[0][2] * v.u2,
            m[1][0] * v.u0 + m[1][1] * v.u1 + m[1][2] * v.u2,
            m[2][0] * v.u0 + m[2][1] * v.u1 + m[2][2] * v.u2};
}

ModelParams default_params() {
    ModelParams p;
    p.regions.L_box = {-2.25, 2.25, -2.25, 2.25, -2.25, 2.25};
    p.regions.Qprime_box = {-0.15, 0.15, 0.65, 1.35, 0.65, 1.35};
    p.regions.Q_box = {-0.12, 0.12, 0.7, 1.3, 0.7, 1.3};
    p.regions.R_box = {0.55, 1.45, -0.3, 0.3, -0.3, 0.3};
    p.regions.U_box = {-2.25, 1.55, -0.6, 0.6, -0.6, 0.6};
    p.regions.zeta = 0.05;
    return p;
}

} // namespace rdyn
