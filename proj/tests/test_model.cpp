#include <doctest.h>

#include <cmath>

#include "rdyn/model.hpp"
#include "rdyn/rng.hpp"

using namespace rdyn;

TEST_CASE("default params validate") {
    CHECK(validate_params(default_params()).ok());
}

TEST_CASE("sectional dissipativity accepts |sigma*lambda| < 1") {
    ModelParams p = default_params();
    p.sigma = 2.0;
    p.lambda1 = 0.4;
    p.lambda2 = 0.1;
    CHECK(validate_params(p).ok());
}

TEST_CASE("sectional dissipativity rejects |sigma*lambda1| >= 1") {
    ModelParams p = default_params();
    p.sigma = 2.0;
    p.lambda1 = 0.6;
    const auto rep = validate_params(p);
    CHECK_FALSE(rep.ok());
    bool named = false;
    for (const auto& i : rep.issues) named |= i.check.find("sigma") != std::string::npos;
    CHECK(named);
}

TEST_CASE("zero fold curvature rejected") {
    ModelParams p = default_params();
    p.a = 0.0;
    CHECK_FALSE(validate_params(p).ok());
}

TEST_CASE("equal contraction rates rejected") {
    ModelParams p = default_params();
    p.lambda2 = p.lambda1;
    CHECK_FALSE(validate_params(p).ok());
}

TEST_CASE("overlapping U and Q rejected") {
    ModelParams p = default_params();
    p.regions.U_box.x1_hi = 1.0; // reaches into Q_box
    p.regions.U_box.x2_hi = 1.0;
    CHECK_FALSE(validate_params(p).ok());
}

TEST_CASE("classify: named points and precedence") {
    const ModelParams p = default_params();
    CHECK(classify(p, fold_base_point()) == RegionLabel::InR);  // r = (1,0,0)
    CHECK(classify(p, tangency_point()) == RegionLabel::InQ);   // q = (0,1,1)
    CHECK(classify(p, {50.0, 50.0, 50.0}) == RegionLabel::Outside);
    CHECK(classify(p, saddle_point()) == RegionLabel::InUOnly); // p sits in U
    // Q' \ Q, still inside L: Qprime wins over LOnly.
    CHECK(classify(p, {0.14, 1.0, 1.0}) == RegionLabel::InQprimeOnly);
    // Annulus just outside R.
    CHECK(classify(p, {0.52, 0.0, 0.0}) == RegionLabel::InAnnulus);
    CHECK(classify(p, {-1.0, 0.0, 0.0}) == RegionLabel::InUOnly);
}

TEST_CASE("step: tangency image is q exactly") {
    const ModelParams p = default_params();
    const auto y = step(p, fold_base_point(), 0.0);
    REQUIRE(y.has_value());
    CHECK(*y == tangency_point());
}

TEST_CASE("step: linear region arithmetic") {
    ModelParams p = default_params();
    p.sigma = 2.0;
    p.lambda1 = 0.4;
    p.lambda2 = 0.1;
    const auto y = step(p, {0.5, 1.0, 1.0}, 0.03);
    REQUIRE(y.has_value());
    CHECK(y->z == doctest::Approx(1.0));
    CHECK(y->x1 == doctest::Approx(0.4));
    CHECK(y->x2 == doctest::Approx(0.1));
}

TEST_CASE("step: fold off-tangency arithmetic") {
    ModelParams p = default_params();
    p.a = -1.0;
    p.b = {0.0, 0.0};
    p.B = {1.0, 1.0};
    p.C = {{{0.0, 0.0}, {0.0, 0.0}}};
    p.A = {0.0, 0.0};
    p.q0 = {1.0, 1.0};
    const auto y = step(p, {1.1, 0.0, 0.0}, 0.02);
    REQUIRE(y.has_value());
    CHECK(y->z == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(y->x1 == doctest::Approx(1.1));
    CHECK(y->x2 == doctest::Approx(1.1));
}

TEST_CASE("step: escape outside L and R") {
    const ModelParams p = default_params();
    CHECK_FALSE(step(p, {50.0, 0.0, 0.0}, 0.05).has_value());
}

TEST_CASE("jacobian in L is diag(sigma, lambda1, lambda2)") {
    const ModelParams p = default_params();
    const Mat3 j = jacobian(p, {0.2, 0.1, -0.1}, 0.05);
    CHECK(j[0][0] == p.sigma);
    CHECK(j[1][1] == p.lambda1);
    CHECK(j[2][2] == p.lambda2);
    CHECK(j[0][1] == 0.0);
    CHECK(j[1][0] == 0.0);
}

TEST_CASE("jacobian at r with h=H=0") {
    const ModelParams p = default_params();
    const Mat3 j = jacobian(p, fold_base_point(), 0.05);
    CHECK(j[0][0] == 0.0); // 2az = 0 at z = 0
    CHECK(j[0][1] == p.b[0]);
    CHECK(j[0][2] == p.b[1]);
    CHECK(j[1][0] == p.B[0]);
    CHECK(j[2][0] == p.B[1]);
    CHECK(j[1][1] == p.C[0][0]);
    CHECK(j[1][2] == p.C[0][1]);
    CHECK(j[2][1] == p.C[1][0]);
    CHECK(j[2][2] == p.C[1][1]);
}

namespace {

// Central finite differences of step, the independent Jacobian oracle.
Mat3 fd_jacobian(const ModelParams& p, const Point& x, double t, double h) {
    Mat3 out{};
    for (int col = 0; col < 3; ++col) {
        Point lo = x, hi = x;
        double* lo_c[3] = {&lo.z, &lo.x1, &lo.x2};
        double* hi_c[3] = {&hi.z, &hi.x1, &hi.x2};
        *lo_c[col] -= h;
        *hi_c[col] += h;
        const auto ylo = step(p, lo, t), yhi = step(p, hi, t);
        REQUIRE(ylo.has_value());
        REQUIRE(yhi.has_value());
        out[0][col] = (yhi->z - ylo->z) / (2 * h);
        out[1][col] = (yhi->x1 - ylo->x1) / (2 * h);
        out[2][col] = (yhi->x2 - ylo->x2) / (2 * h);
    }
    return out;
}

} // namespace

TEST_CASE("jacobian matches finite differences over random samples") {
    ModelParams p = default_params();
    // Exercise the higher-order terms too.
    p.higher_order.h_z3 = 0.01;
    p.higher_order.H1_z2 = 0.02;
    p.higher_order.h_x1sq = 0.015;
    CounterRng rng(11);
    int tested = 0;
    while (tested < 1000) {
        const bool in_r = rng.next_double() < 0.5;
        const Box3& box = in_r ? p.regions.R_box : p.regions.L_box;
        Point x{box.z_lo + 0.02 + (box.z_hi - box.z_lo - 0.04) * rng.next_double(),
                box.x1_lo + 0.02 + (box.x1_hi - box.x1_lo - 0.04) * rng.next_double(),
                box.x2_lo + 0.02 + (box.x2_hi - box.x2_lo - 0.04) * rng.next_double()};
        // keep the difference stencil away from the R boundary
        if (!in_r && p.regions.R_box.inflated(1e-3).contains(x)) continue;
        const double t = 0.001 + 0.098 * rng.next_double();
        const Mat3 an = jacobian(p, x, t);
        const Mat3 fd = fd_jacobian(p, x, t, 1e-6);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double scale = std::max(1.0, std::abs(an[i][j]));
                CHECK(std::abs(an[i][j] - fd[i][j]) / scale <= 1e-6);
            }
        ++tested;
    }
}

TEST_CASE("t_derivative matches finite differences") {
    const ModelParams p = default_params();
    const Point x{1.05, 0.1, -0.05};
    const double t = 0.05, h = 1e-7;
    const auto d = t_derivative(p, x, t);
    const auto lo = step(p, x, t - h), hi = step(p, x, t + h);
    CHECK(d[0] == doctest::Approx((hi->z - lo->z) / (2 * h)).epsilon(1e-6));
    CHECK(d[1] == doctest::Approx((hi->x1 - lo->x1) / (2 * h)).epsilon(1e-6));
    CHECK(d[2] == doctest::Approx((hi->x2 - lo->x2) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("slope, norm and angle definitions") {
    CHECK(slope({1, 1, 1}) == 1.0);
    CHECK(norm_max({1, 1, 1}) == 1.0);
    CHECK(std::isinf(slope({3, 0, 0})));
    CHECK(angle_to({1, 0, 0}, {0, 1, 0}) == doctest::Approx(std::acos(-1.0) / 2));
    CHECK_THROWS(slope({0, 0, 0}));
    CHECK_THROWS(angle_to({0, 0, 0}, {1, 0, 0}));
}

TEST_CASE("cone invariance and norm expansion in L") {
    const ModelParams p = default_params();
    const Mat3 j = jacobian(p, {0.1, 0.1, 0.1}, 0.05);
    const double eta = 1.0 / std::max(std::abs(p.sigma * p.lambda1),
                                      std::abs(p.sigma * p.lambda2));
    CHECK(eta > 1.0);
    CounterRng rng(5);
    for (int i = 0; i < 50; ++i) {
        const TangentVector v{1.0, 0.2 * (2 * rng.next_double() - 1),
                              0.2 * (2 * rng.next_double() - 1)};
        if (norm_max({0, v.u1, v.u2}) == 0.0) continue;
        const TangentVector w = apply(j, v);
        // slope multiplies exactly by sigma/|lambda1| (weak direction hit).
        if (std::abs(v.u1) * p.lambda1 >= std::abs(v.u2) * p.lambda2 &&
            std::abs(v.u1) >= std::abs(v.u2))
            CHECK(slope(w) ==
                  doctest::Approx(slope(v) * p.sigma / std::abs(p.lambda1)));
        CHECK(slope(w) >= eta * slope(v) * (1 - 1e-12));
        if (slope(v) >= 1.0)
            CHECK(norm_max(w) == doctest::Approx(p.sigma * norm_max(v)));
    }
}

TEST_CASE("region exclusivity on random points") {
    const ModelParams p = default_params();
    CounterRng rng(17);
    for (int i = 0; i < 1000; ++i) {
        const Point x{6 * rng.next_double() - 3, 6 * rng.next_double() - 3,
                      6 * rng.next_double() - 3};
        const RegionLabel l = classify(p, x);
        // classify is total and deterministic; re-evaluation agrees.
        CHECK(classify(p, x) == l);
    }
}
