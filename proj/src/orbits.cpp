#include "rdyn/orbits.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "rdyn/rng.hpp"

namespace rdyn {

OrbitRecord random_orbit(const ModelParams& model, const NoiseKernel& kernel,
                         const Point& x0, std::size_t n, std::uint64_t seed) {
    OrbitRecord rec;
    rec.start = x0;
    rec.sequence = sample_sequence(kernel, n, seed);
    rec.points.reserve(n + 1);
    rec.labels.reserve(n + 1);
    rec.points.push_back(x0);
    rec.labels.push_back(classify(model, x0));
    for (std::size_t k = 0; k < n; ++k) {
        const auto next = step(model, rec.points.back(), rec.sequence.values[k]);
        if (!next) {
            rec.escaped_at = k;
            break;
        }
        rec.points.push_back(*next);
        rec.labels.push_back(classify(model, rec.points.back()));
    }
    return rec;
}

ReturnTimes return_times(const OrbitRecord& record) {
    ReturnTimes rt;
    std::size_t last = 0;
    for (std::size_t k = 1; k < record.labels.size(); ++k) {
        if (record.labels[k] == RegionLabel::InQ) {
            // A return to Q is always preceded by a visit to R.
            assert(record.labels[k - 1] == RegionLabel::InR);
            rt.times.push_back(k - last);
            last = k;
        }
    }
    rt.truncated = !record.escaped_at.has_value();
    return rt;
}

std::vector<std::size_t> cumulative_returns(const ReturnTimes& rt) {
    std::vector<std::size_t> out;
    out.reserve(rt.times.size());
    std::size_t acc = 0;
    for (std::size_t r : rt.times) out.push_back(acc += r);
    return out;
}

BirkhoffResult birkhoff_average(const OrbitRecord& record,
                                const std::function<double(const Point&)>& phi) {
    BirkhoffResult res;
    res.n_points = record.points.size();
    res.escaped_before_horizon = record.escaped_at.has_value();
    if (record.points.empty()) return res;
    double s = 0.0;
    for (const Point& p : record.points) s += phi(p);
    res.value = s / static_cast<double>(record.points.size());
    return res;
}

namespace {

bool label_on_uq_side(RegionLabel l) {
    switch (l) {
        case RegionLabel::InR:
        case RegionLabel::InQ:
        case RegionLabel::InQprimeOnly:
        case RegionLabel::InAnnulus:
        case RegionLabel::InUOnly:
            return true;
        default:
            return false;
    }
}

} // namespace

RecurrenceReport classify_recurrence(const ModelParams& model,
                                     const NoiseKernel& kernel, const Point& x0,
                                     std::size_t n_sequences, std::size_t horizon,
                                     std::size_t burn_in, std::uint64_t seed) {
    RecurrenceReport rep;
    rep.n_sequences = n_sequences;

    std::size_t recurrent = 0;
    std::size_t max_gap = 0;
    bool have_common = false;
    bool common_ok = true;
    std::vector<std::size_t> common;

    for (std::size_t s = 0; s < n_sequences; ++s) {
        const std::uint64_t seq_seed = derive_seed(seed, s);
        Point x = x0;
        bool side_ok = true;
        bool escaped = false;
        std::size_t last_return = 0;
        std::size_t inner_max = 0;
        std::size_t n_returns = 0;
        std::vector<std::size_t> first3;
        RegionLabel prev = classify(model, x0);
        for (std::size_t k = 1; k <= horizon; ++k) {
            const double t = sequence_value(kernel, seq_seed, k - 1);
            const auto next = step(model, x, t);
            if (!next) {
                escaped = true;
                if (k > burn_in) side_ok = false;
                break;
            }
            x = *next;
            const RegionLabel l = classify(model, x);
            if (k > burn_in && !label_on_uq_side(l)) side_ok = false;
            if (l == RegionLabel::InQ) {
                assert(prev == RegionLabel::InR);
                ++n_returns;
                if (n_returns >= 2)
                    inner_max = std::max(inner_max, k - last_return);
                if (first3.size() < 3) first3.push_back(k);
                last_return = k;
            }
            prev = l;
        }
        const std::size_t tail = escaped ? horizon : horizon - last_return;
        const bool keeps_returning =
            n_returns > 0 && tail <= std::max(2 * inner_max, std::max<std::size_t>(burn_in, 1));
        if (side_ok && !escaped && keeps_returning) {
            ++recurrent;
            max_gap = std::max(max_gap, inner_max);
        }
        if (first3.size() < 3) {
            common_ok = false;
        } else if (!have_common) {
            common = first3;
            have_common = true;
        } else if (first3 != common) {
            common_ok = false;
        }
    }

    rep.fraction_recurrent =
        n_sequences ? static_cast<double>(recurrent) / n_sequences : 0.0;
    rep.max_return_gap = max_gap;
    rep.return_times_sequence_independent = have_common && common_ok;
    if (rep.return_times_sequence_independent) rep.common_first_returns = common;
    return rep;
}

std::vector<Observable> builtin_observables(const ModelParams& model,
                                            double smooth_z, double smooth_x1,
                                            double smooth_x2) {
    auto overlap = [](double lo, double hi, double c, double w) {
        if (w <= 0.0) return (c >= lo && c <= hi) ? 1.0 : 0.0;
        const double a = c - 0.5 * w, b = c + 0.5 * w;
        return std::max(0.0, std::min(b, hi) - std::max(a, lo)) / w;
    };
    const Box3 q = model.regions.Q_box;
    std::vector<Observable> fam;
    fam.push_back({"z", [](const Point& p) { return p.z; }});
    fam.push_back({"x1", [](const Point& p) { return p.x1; }});
    fam.push_back({"x2", [](const Point& p) { return p.x2; }});
    fam.push_back({"z2", [](const Point& p) { return p.z * p.z; }});
    fam.push_back({"x1sq", [](const Point& p) { return p.x1 * p.x1; }});
    fam.push_back({"x2sq", [](const Point& p) { return p.x2 * p.x2; }});
    fam.push_back({"q_indicator",
                   [q, overlap, smooth_z, smooth_x1, smooth_x2](const Point& p) {
                       return overlap(q.z_lo, q.z_hi, p.z, smooth_z) *
                              overlap(q.x1_lo, q.x1_hi, p.x1, smooth_x1) *
                              overlap(q.x2_lo, q.x2_hi, p.x2, smooth_x2);
                   }});
    return fam;
}

} // namespace rdyn
