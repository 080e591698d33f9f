#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rdyn/model.hpp"
#include "rdyn/noise.hpp"

namespace rdyn {

struct ConeParams {
    double c0{10.0}; // lower slope threshold for vertical cones
    double b0{0.2};  // upper slope / angle bound after a return
};

struct SlopeWitness {
    Point x;
    TangentVector v;
    std::uint64_t sample_index; // replay: derive_seed(seed, sample_index)
};

struct SlopeReport {
    std::size_t n_samples{0};
    std::size_t n_returned{0}; // samples whose orbit came back to Q
    double pass_fraction_slope{0.0};
    double pass_fraction_norm{0.0};
    double pass_fraction_angle{0.0};
    double min_norm_ratio{0.0};  // min ||w|| / ||v|| over returned samples
    double max_return_slope{0.0};
    double max_angle_to_B{0.0};  // radians
    double eta{0.0};             // cone expansion rate 1 / max|sigma lambda_i|
    std::size_t min_linear_steps{0}; // smallest Q -> R transit observed
    std::vector<SlopeWitness> failures;
};

struct CurveReport {
    std::vector<double> s;
    std::vector<Point> gamma;       // gamma~(s) = f_s y
    std::vector<TangentVector> derivative;   // finite differences in s
    double min_slope{0.0};
    double min_speed{0.0};
};

struct DiskSample {
    Point base;                          // y in R_box
    std::vector<double> u_values;        // restricted to the constant patch
    std::vector<double> s_values;
    std::vector<std::size_t> return_time_field; // R(s) over the full s grid
    std::size_t return_time{0};          // common R on the patch
    std::vector<Point> points;           // row-major: points[iu * n_s + is]
    std::vector<TangentVector> du;                // partial in u (finite differences)
    std::vector<TangentVector> ds;                // partial in s
    double min_slope_du{0.0};
    double max_slope_ds{0.0};
    double min_norm_du{0.0};
    double min_norm_ds{0.0};
    double max_angle_ds_to_B{0.0};
    double diameter{0.0};                // max-norm diameter of the disk
    bool bounds_pass{false};             // Eqs. 10-11 at every node
};

struct BallReport {
    Point center;            // f_{t0}-orbit image at the third return
    double radius{0.0};      // largest certified covered radius
    double k_empirical{0.0}; // radius / epsilon
    std::size_t n_sequences{0};
    double grid_spacing{0.0};
    std::size_t n_visited_cells{0};
    std::array<std::size_t, 3> return_steps{}; // R(1), R(2), R(3)
    double sigma_min{0.0};   // smallest singular value of D_{i,j,k} phi
};

// Applies the chain rule d(f^k)_x v along the orbit of x under t_list.
// Throws std::runtime_error when the orbit escapes before the end.
TangentVector propagate_tangent(const ModelParams& model, const Point& x,
                       const std::vector<double>& t_list, const TangentVector& v);

// Samples x in Q and unit v with slope(v) >= c0, follows random orbits to
// the first return to Q, and checks the three return-cone conclusions:
// slope <= b0, norm ratio >= ||B||/10, angle to B <= b0. Non-returning
// samples are excluded and counted via n_returned.
SlopeReport verify_lemma_3_2(const ModelParams& model, const NoiseKernel& kernel,
                             const ConeParams& cone, std::size_t n_samples,
                             std::uint64_t seed, std::size_t max_steps = 1000);

// Evaluates gamma~(s) = f_s y over a resolution-point grid on supp(theta)
// with finite-difference derivatives. Throws when an image escapes.
CurveReport perturbation_curve(const ModelParams& model, const Point& y,
                               const NoiseKernel& kernel, std::size_t resolution);

// Samples the return 2-disk gamma(u, s) = f_u(f_v^{R-1} f_s y) under a
// fixed interior sequence drawn from the kernel. The return-time field
// over s is measured; the disk is restricted to the largest constant patch
// containing s = t0. Throws std::runtime_error("return-time-not-constant")
// when that patch is too small to difference.
DiskSample return_disk(const ModelParams& model, const Point& y,
                       const NoiseKernel& kernel, std::size_t resolution,
                       std::uint64_t seed, const ConeParams& cone = {},
                       std::size_t max_steps = 1000);

// Coverage certificate for the inner ball around the third-return image of
// the constant-t0 orbit, plus the finite-difference submersion margin of
// phi(t_i, t_j, t_k). Throws std::runtime_error("screen-failed") when x
// does not pass the sequence-independence screen.
BallReport verify_ball(const ModelParams& model, const NoiseKernel& kernel,
                       const Point& x, std::size_t n_sequences,
                       double grid_spacing, std::uint64_t seed,
                       std::size_t screen_sequences = 64,
                       std::size_t screen_horizon = 200);

} // namespace rdyn
