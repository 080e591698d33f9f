#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdyn/model.hpp"
#include "rdyn/noise.hpp"

namespace rdyn {

struct OrbitRecord {
    Point start;
    NoiseSequence sequence;
    std::vector<Point> points;        // points[0] == start
    std::vector<RegionLabel> labels;  // labels[k] = classify(points[k])
    std::optional<std::size_t> escaped_at; // index of the point the orbit escaped from
};

struct ReturnTimes {
    std::vector<std::size_t> times; // k-th entry is r(k, t, x)
    bool truncated{false};          // horizon ended before the next return
};

struct RecurrenceReport {
    std::size_t n_sequences{0};
    double fraction_recurrent{0.0};
    std::size_t max_return_gap{0};  // empirical J, over gaps r(k), k >= 2
    bool return_times_sequence_independent{false};
    // First three cumulative return iterates when they coincide across all
    // sampled sequences (the numerically checkable part of regularity).
    std::vector<std::size_t> common_first_returns;
};

struct BirkhoffResult {
    double value{0.0};
    bool escaped_before_horizon{false};
    std::size_t n_points{0};
};

struct Observable {
    std::string name;
    std::function<double(const Point&)> fn;
};

// Drives a random orbit for up to n steps, recording points and labels.
// Stops early when the orbit escapes; escape is recorded, not thrown.
OrbitRecord random_orbit(const ModelParams& model, const NoiseKernel& kernel,
                         const Point& x0, std::size_t n, std::uint64_t seed);

// Successive first-entry times into Q (labels at index >= 1).
ReturnTimes return_times(const OrbitRecord& record);

// Cumulative return iterates R(k) = sum of the first k entries.
std::vector<std::size_t> cumulative_returns(const ReturnTimes& rt);

// Time average of phi over the recorded points.
BirkhoffResult birkhoff_average(const OrbitRecord& record,
                                const std::function<double(const Point&)>& phi);

// Monte Carlo check of the recurrence conditions: after burn_in the orbit
// must stay on the U/Q side (labels InR, InQ, InQprimeOnly, InAnnulus,
// InUOnly) and keep returning to Q up to the horizon. A sequence counts as
// recurrent when additionally the tail without a return is no longer than
// max(2 * max inner gap, burn_in). Sequence independence is judged on the
// first three cumulative return iterates.
RecurrenceReport classify_recurrence(const ModelParams& model,
                                     const NoiseKernel& kernel, const Point& x0,
                                     std::size_t n_sequences, std::size_t horizon,
                                     std::size_t burn_in, std::uint64_t seed);

// The built-in observable family: coordinates, their squares, and the
// indicator of Q smoothed by averaging over a box of the given widths.
std::vector<Observable> builtin_observables(const ModelParams& model,
                                            double smooth_z, double smooth_x1,
                                            double smooth_x2);

} // namespace rdyn
