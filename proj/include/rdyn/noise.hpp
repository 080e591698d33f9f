#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdyn/model.hpp"

namespace rdyn {

enum class KernelKind { Uniform, AbsContinuous };

// One node of a piecewise-linear density table on the kernel support.
struct DensityKnot {
    double t;
    double value; // >= 0, > 0 a.e. on the support
};

// The perturbation measure theta_eps on the parameter interval. Uniform is
// the normalized restriction of Lebesgue measure to [t0 - eps, t0 + eps];
// AbsContinuous carries a positive piecewise-linear density on the same
// interval, normalized at construction.
struct NoiseKernel {
    KernelKind kind{KernelKind::Uniform};
    double t0{0.05};
    double epsilon{0.01};
    std::vector<DensityKnot> density; // AbsContinuous only; knots span the support

    double lo() const { return t0 - epsilon; }
    double hi() const { return t0 + epsilon; }
};

// Checks positivity of epsilon, support inside ]0, t_star[ and, for the
// AbsContinuous kind, that the density table is usable.
ValidationReport validate_kernel(const NoiseKernel& k, double t_star);

// Density of the kernel at t (0 outside the support). The AbsContinuous
// table is normalized internally so the density integrates to 1.
double kernel_density(const NoiseKernel& k, double t);

// One draw. Uniform uses inverse-CDF; AbsContinuous uses rejection against
// the table maximum with a bounded budget.
// Throws std::runtime_error when the rejection budget is exhausted.
double sample(const NoiseKernel& k, class CounterRng& rng);

struct NoiseSequence {
    std::vector<double> values;
    std::uint64_t seed{0};
    std::string generator{"splitmix64-counter"};
};

// Deterministic given (seed, kernel, n); value k depends on (seed, k) only.
NoiseSequence sample_sequence(const NoiseKernel& k, std::size_t n,
                              std::uint64_t seed);

// The k-th value of the sequence stream without materializing the prefix.
double sequence_value(const NoiseKernel& k, std::uint64_t seed, std::uint64_t index);

} // namespace rdyn
