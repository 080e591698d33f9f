#include "rdyn/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdyn/rng.hpp"

namespace rdyn {

namespace {

// Integral of the piecewise-linear table (trapezoid rule is exact here).
double table_integral(const std::vector<DensityKnot>& knots) {
    double s = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        s += 0.5 * (knots[i].value + knots[i - 1].value) *
             (knots[i].t - knots[i - 1].t);
    }
    return s;
}

double table_value(const std::vector<DensityKnot>& knots, double t) {
    if (t < knots.front().t || t > knots.back().t) return 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (t <= knots[i].t) {
            const double w = knots[i].t - knots[i - 1].t;
            const double u = w > 0 ? (t - knots[i - 1].t) / w : 0.0;
            return knots[i - 1].value + u * (knots[i].value - knots[i - 1].value);
        }
    }
    return knots.back().value;
}

} // namespace

ValidationReport validate_kernel(const NoiseKernel& k, double t_star) {
    ValidationReport rep;
    if (k.epsilon <= 0.0)
        rep.issues.push_back({"epsilon > 0", "epsilon must be positive"});
    if (!(k.lo() > 0.0))
        rep.issues.push_back({"t0 - epsilon > 0", "support must stay above 0"});
    if (!(k.hi() < t_star))
        rep.issues.push_back(
            {"t0 + epsilon < t_star", "support must stay below t_star"});
    if (k.kind == KernelKind::AbsContinuous) {
        if (k.density.size() < 2) {
            rep.issues.push_back({"density table", "needs at least two knots"});
        } else {
            bool sorted = true, nonneg = true;
            for (std::size_t i = 0; i < k.density.size(); ++i) {
                if (k.density[i].value < 0.0) nonneg = false;
                if (i > 0 && k.density[i].t <= k.density[i - 1].t) sorted = false;
            }
            if (!sorted)
                rep.issues.push_back({"density table", "knots must be increasing in t"});
            if (!nonneg)
                rep.issues.push_back({"density table", "values must be nonnegative"});
            if (sorted && nonneg && table_integral(k.density) <= 0.0)
                rep.issues.push_back({"density table", "must have positive mass"});
            if (sorted &&
                (std::abs(k.density.front().t - k.lo()) > 1e-12 ||
                 std::abs(k.density.back().t - k.hi()) > 1e-12))
                rep.issues.push_back(
                    {"density table", "knots must span [t0-eps, t0+eps]"});
        }
    }
    return rep;
}

double kernel_density(const NoiseKernel& k, double t) {
    if (t < k.lo() || t > k.hi()) return 0.0;
    if (k.kind == KernelKind::Uniform) return 0.5 / k.epsilon;
    return table_value(k.density, t) / table_integral(k.density);
}

double sample(const NoiseKernel& k, CounterRng& rng) {
    if (k.kind == KernelKind::Uniform) {
        return k.lo() + 2.0 * k.epsilon * rng.next_double();
    }
    const double norm = table_integral(k.density);
    double envelope = 0.0;
    for (const auto& knot : k.density) envelope = std::max(envelope, knot.value);
    envelope /= norm;
    // Budget scales with the envelope-to-uniform ratio so a pathological
    // table fails loudly instead of spinning.
    const double ratio = envelope * 2.0 * k.epsilon;
    const std::size_t budget =
        10000 * static_cast<std::size_t>(std::max(1.0, std::ceil(ratio)));
    for (std::size_t i = 0; i < budget; ++i) {
        const double t = k.lo() + 2.0 * k.epsilon * rng.next_double();
        const double u = rng.next_double() * envelope;
        if (u < table_value(k.density, t) / norm) return t;
    }
    throw std::runtime_error(
        "noise: rejection budget exhausted, density table looks misconfigured");
}

double sequence_value(const NoiseKernel& k, std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(derive_seed(seed, index));
    return sample(k, rng);
}

NoiseSequence sample_sequence(const NoiseKernel& k, std::size_t n,
                              std::uint64_t seed) {
    NoiseSequence seq;
    seq.seed = seed;
    seq.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        seq.values.push_back(sequence_value(k, seed, i));
    return seq;
}

} // namespace rdyn
