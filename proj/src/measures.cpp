#include "rdyn/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rdyn/parallel.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

std::size_t Grid3::cell_of(const Point& p) const {
    if (!bounds.contains(p)) return outside_index();
    auto idx = [](double v, double lo, double d, std::size_t n) {
        auto i = static_cast<std::size_t>((v - lo) / d);
        return std::min(i, n - 1); // right boundary belongs to the last cell
    };
    const std::size_t iz = idx(p.z, bounds.z_lo, dz(), n_z);
    const std::size_t i1 = idx(p.x1, bounds.x1_lo, d1(), n_1);
    const std::size_t i2 = idx(p.x2, bounds.x2_lo, d2(), n_2);
    return (iz * n_1 + i1) * n_2 + i2;
}

Point Grid3::cell_center(std::size_t idx) const {
    const std::size_t i2 = idx % n_2;
    const std::size_t i1 = (idx / n_2) % n_1;
    const std::size_t iz = idx / (n_1 * n_2);
    return {bounds.z_lo + (double(iz) + 0.5) * dz(),
            bounds.x1_lo + (double(i1) + 0.5) * d1(),
            bounds.x2_lo + (double(i2) + 0.5) * d2()};
}

Box3 Grid3::cell_box(std::size_t idx) const {
    const Point c = cell_center(idx);
    return {c.z - 0.5 * dz(), c.z + 0.5 * dz(), c.x1 - 0.5 * d1(),
            c.x1 + 0.5 * d1(), c.x2 - 0.5 * d2(), c.x2 + 0.5 * d2()};
}

Grid3 default_grid(const ModelParams& model, std::size_t n) {
    const RegionGeometry& g = model.regions;
    // Symmetric z bounds keep z = 0 on a cell boundary at every even
    // resolution; a cell straddling the stable manifold would mix escaping
    // and recurrent samples.
    const double zmax =
        std::max({std::abs(g.U_box.z_lo), std::abs(g.U_box.z_hi),
                  std::abs(g.Qprime_box.z_lo), std::abs(g.Qprime_box.z_hi)});
    const double pad = 0.05;
    Grid3 grid;
    grid.bounds.z_lo = -zmax;
    grid.bounds.z_hi = zmax;
    grid.bounds.x1_lo = std::min(g.U_box.x1_lo, g.Qprime_box.x1_lo) - pad;
    grid.bounds.x1_hi = std::max(g.U_box.x1_hi, g.Qprime_box.x1_hi) + pad;
    grid.bounds.x2_lo = std::min(g.U_box.x2_lo, g.Qprime_box.x2_lo) - pad;
    grid.bounds.x2_hi = std::max(g.U_box.x2_hi, g.Qprime_box.x2_hi) + pad;
    grid.n_z = grid.n_1 = grid.n_2 = n;
    return grid;
}

double Histogram::total() const {
    return std::accumulate(masses.begin(), masses.end(), 0.0) + escaped_mass;
}

double UlamOperator::row_sum(std::size_t row) const {
    double s = 0.0;
    for (std::size_t k = row_ptr[row]; k < row_ptr[row + 1]; ++k) s += probs[k];
    return s;
}

Histogram cesaro_measure(const ModelParams& model, const NoiseKernel& kernel,
                         const Point& x, std::size_t n, std::size_t n_sequences,
                         const Grid3& grid, std::uint64_t seed,
                         unsigned n_threads) {
    // Integer visit counts make the accumulation order irrelevant, so the
    // result is identical for any worker count.
    std::vector<std::atomic<std::uint64_t>> counts(grid.n_cells() + 1);
    for (auto& c : counts) c.store(0, std::memory_order_relaxed);
    std::atomic<std::uint64_t> escaped{0};

    parallel_for(n_sequences, n_threads, [&](std::size_t s) {
        const std::uint64_t seq_seed = derive_seed(seed, s);
        Point p = x;
        std::size_t j = 0;
        for (; j < n; ++j) {
            counts[grid.cell_of(p)].fetch_add(1, std::memory_order_relaxed);
            const auto next = step(model, p, sequence_value(kernel, seq_seed, j));
            if (!next) {
                ++j;
                break;
            }
            p = *next;
        }
        if (j < n) escaped.fetch_add(n - j, std::memory_order_relaxed);
    });

    Histogram h;
    h.grid = grid;
    h.masses.resize(grid.n_cells());
    const double w = 1.0 / (double(n) * double(n_sequences));
    for (std::size_t i = 0; i < grid.n_cells(); ++i)
        h.masses[i] = double(counts[i].load()) * w;
    // Points inside the model but outside the carrier count as escaped.
    h.escaped_mass =
        double(escaped.load() + counts[grid.outside_index()].load()) * w;
    return h;
}

UlamOperator build_ulam(const ModelParams& model, const NoiseKernel& kernel,
                        const Grid3& grid, std::size_t samples_per_cell,
                        std::uint64_t seed, unsigned n_threads) {
    const std::size_t n = grid.n_cells();
    UlamOperator op;
    op.grid = grid;
    op.samples_per_cell = samples_per_cell;

    auto sample_row = [&](std::size_t i, std::vector<std::uint32_t>& dests) {
        dests.clear();
        const Box3 cb = grid.cell_box(i);
        CounterRng rng(derive_seed(seed, i));
        for (std::size_t s = 0; s < samples_per_cell; ++s) {
            Point x{cb.z_lo + (cb.z_hi - cb.z_lo) * rng.next_double(),
                    cb.x1_lo + (cb.x1_hi - cb.x1_lo) * rng.next_double(),
                    cb.x2_lo + (cb.x2_hi - cb.x2_lo) * rng.next_double()};
            const double t = sample(kernel, rng);
            const auto y = step(model, x, t);
            dests.push_back(static_cast<std::uint32_t>(
                y ? grid.cell_of(*y) : grid.outside_index()));
        }
        std::sort(dests.begin(), dests.end());
    };

    // Pass 1: count distinct destinations per row.
    std::vector<std::uint32_t> nnz(n + 1, 0);
    parallel_for(n, n_threads, [&](std::size_t i) {
        thread_local std::vector<std::uint32_t> dests;
        sample_row(i, dests);
        std::uint32_t distinct = 0;
        for (std::size_t k = 0; k < dests.size(); ++k)
            if (k == 0 || dests[k] != dests[k - 1]) ++distinct;
        nnz[i] = distinct;
    });
    nnz[n] = 1; // absorbing Outside row

    op.row_ptr.assign(n + 2, 0);
    for (std::size_t i = 0; i <= n; ++i) op.row_ptr[i + 1] = op.row_ptr[i] + nnz[i];
    op.cols.resize(op.row_ptr.back());
    op.probs.resize(op.row_ptr.back());

    // Pass 2: regenerate the same samples and fill.
    parallel_for(n, n_threads, [&](std::size_t i) {
        thread_local std::vector<std::uint32_t> dests;
        sample_row(i, dests);
        std::size_t out = op.row_ptr[i];
        const double w = 1.0 / double(samples_per_cell);
        std::size_t k = 0;
        while (k < dests.size()) {
            std::size_t k2 = k;
            while (k2 < dests.size() && dests[k2] == dests[k]) ++k2;
            op.cols[out] = dests[k];
            op.probs[out] = double(k2 - k) * w;
            ++out;
            k = k2;
        }
    });
    op.cols[op.row_ptr[n]] = static_cast<std::uint32_t>(n);
    op.probs[op.row_ptr[n]] = 1.0;
    return op;
}

namespace {

// Iterative Tarjan over the CSR graph; returns component id per node and
// the component count. Ids are in reverse topological order.
std::size_t strongly_connected(const UlamOperator& P,
                               std::vector<std::uint32_t>& comp) {
    const std::size_t n = P.n_states();
    constexpr std::uint32_t kUnset = 0xFFFFFFFF;
    std::vector<std::uint32_t> index(n, kUnset), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::uint32_t> stack;
    comp.assign(n, kUnset);
    std::uint32_t next_index = 0, n_comp = 0;

    struct Frame {
        std::uint32_t v;
        std::size_t edge;
    };
    std::vector<Frame> call;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnset) continue;
        call.push_back({static_cast<std::uint32_t>(root), P.row_ptr[root]});
        index[root] = low[root] = next_index++;
        stack.push_back(static_cast<std::uint32_t>(root));
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.edge < P.row_ptr[f.v + 1]) {
                const std::uint32_t w = P.cols[f.edge++];
                if (index[w] == kUnset) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, P.row_ptr[w]});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    while (true) {
                        const std::uint32_t w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = n_comp;
                        if (w == f.v) break;
                    }
                    ++n_comp;
                }
                const std::uint32_t v = f.v;
                call.pop_back();
                if (!call.empty())
                    low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    return n_comp;
}

} // namespace

PhysicalMeasureSet stationary_components(const ModelParams& model,
                                         const UlamOperator& P, double tol,
                                         std::size_t max_iter) {
    const std::size_t n = P.n_states();
    std::vector<std::uint32_t> comp;
    const std::size_t n_comp = strongly_connected(P, comp);

    std::vector<bool> closed(n_comp, true);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t e = P.row_ptr[v]; e < P.row_ptr[v + 1]; ++e)
            if (comp[P.cols[e]] != comp[v]) closed[comp[v]] = false;
    closed[comp[P.grid.outside_index()]] = false; // conditioned dynamics only

    std::vector<std::vector<std::uint32_t>> members(n_comp);
    for (std::size_t v = 0; v < n; ++v)
        if (v != P.grid.outside_index() && closed[comp[v]])
            members[comp[v]].push_back(static_cast<std::uint32_t>(v));

    PhysicalMeasureSet set;
    for (std::size_t c = 0; c < n_comp; ++c) {
        if (!closed[c] || members[c].empty()) continue;
        const auto& cells = members[c];
        const std::size_t m = cells.size();
        std::vector<std::uint32_t> local(P.grid.n_cells(), 0);
        for (std::size_t i = 0; i < m; ++i) local[cells[i]] = std::uint32_t(i);

        std::vector<double> pi(m, 1.0 / double(m)), next(m);
        double residual = 0.0;
        bool converged = false;
        for (std::size_t it = 0; it < max_iter; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const std::uint32_t v = cells[i];
                for (std::size_t e = P.row_ptr[v]; e < P.row_ptr[v + 1]; ++e)
                    next[local[P.cols[e]]] += pi[i] * P.probs[e];
            }
            residual = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                residual += std::abs(next[i] - pi[i]);
            if (residual <= tol) {
                converged = true;
                break;
            }
            // Damped update handles periodic classes.
            double total = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                total += pi[i] = 0.5 * pi[i] + 0.5 * next[i];
            for (double& v : pi) v /= total;
        }
        if (!converged)
            throw std::runtime_error(
                "stationary_components: power iteration budget exhausted "
                "(nearly periodic class; increase max_iter or use the cyclic "
                "average)");

        MeasureComponent out;
        out.support = cells;
        out.density = pi;
        out.stationarity_residual_l1 = residual;
        for (std::size_t i = 0; i < m; ++i) {
            if (pi[i] > 0.0 &&
                !P.grid.cell_box(cells[i]).disjoint(model.regions.Q_box)) {
                out.intersects_Q = true;
                break;
            }
        }
        set.components.push_back(std::move(out));
    }
    std::sort(set.components.begin(), set.components.end(),
              [](const MeasureComponent& a, const MeasureComponent& b) {
                  return a.support.front() < b.support.front();
              });
    for (const auto& c : set.components)
        if (c.intersects_Q) ++set.count_l;
    return set;
}

double stationarity_residual(const Histogram& mu, const ModelParams& model,
                             const NoiseKernel& kernel,
                             const std::vector<Observable>& observables,
                             std::size_t n_quadrature) {
    // Quadrature nodes and weights over the kernel support.
    std::vector<double> nodes(n_quadrature), weights(n_quadrature);
    double wsum = 0.0;
    for (std::size_t q = 0; q < n_quadrature; ++q) {
        nodes[q] = kernel.lo() +
                   (double(q) + 0.5) * (kernel.hi() - kernel.lo()) / double(n_quadrature);
        wsum += weights[q] = kernel_density(kernel, nodes[q]);
    }
    for (double& w : weights) w /= wsum;

    // The histogram lifts to a piecewise-uniform density, so the spatial
    // quadrature averages over a sub-grid of each cell rather than its
    // center; a 2x2x2 midpoint rule matches the Ulam sampling model.
    constexpr int sub = 2;
    double worst = 0.0;
    for (const Observable& phi : observables) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < mu.masses.size(); ++i) {
            const double m = mu.masses[i];
            if (m == 0.0) continue;
            const Box3 cb = mu.grid.cell_box(i);
            const double w = m / double(sub * sub * sub);
            for (int iz = 0; iz < sub; ++iz)
                for (int i1 = 0; i1 < sub; ++i1)
                    for (int i2 = 0; i2 < sub; ++i2) {
                        const Point x{
                            cb.z_lo + (cb.z_hi - cb.z_lo) * (iz + 0.5) / sub,
                            cb.x1_lo + (cb.x1_hi - cb.x1_lo) * (i1 + 0.5) / sub,
                            cb.x2_lo + (cb.x2_hi - cb.x2_lo) * (i2 + 0.5) / sub};
                        lhs += w * phi.fn(x);
                        for (std::size_t q = 0; q < n_quadrature; ++q) {
                            const auto y = step(model, x, nodes[q]);
                            if (y) rhs += w * weights[q] * phi.fn(*y);
                        }
                    }
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

double mutual_singularity(const MeasureComponent& m1, const MeasureComponent& m2) {
    auto mass_on = [](const MeasureComponent& a, const MeasureComponent& b) {
        double s = 0.0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < a.support.size(); ++i) {
            while (j < b.support.size() && b.support[j] < a.support[i]) ++j;
            if (j < b.support.size() && b.support[j] == a.support[i] &&
                b.density[j] > 0.0)
                s += a.density[i];
        }
        return s;
    };
    return 0.5 * (mass_on(m1, m2) + mass_on(m2, m1));
}

AbsContinuityReport abs_continuity_diagnostic(
    const std::vector<Histogram>& refinements, double max_factor) {
    AbsContinuityReport rep;
    for (const Histogram& h : refinements) {
        double dmax = 0.0;
        for (double m : h.masses) dmax = std::max(dmax, m);
        rep.max_density.push_back(dmax / h.grid.cell_volume());
    }
    rep.bounded = true;
    for (std::size_t i = 1; i < rep.max_density.size(); ++i) {
        const double r = rep.max_density[i] / rep.max_density[i - 1];
        rep.density_ratio.push_back(r);
        if (r > max_factor || r < 1.0 / max_factor) rep.bounded = false;
    }
    return rep;
}

std::vector<double> component_mean(const MeasureComponent& c, const Grid3& grid,
                                   const std::vector<Observable>& observables) {
    std::vector<double> mean(observables.size(), 0.0);
    for (std::size_t i = 0; i < c.support.size(); ++i) {
        const Point x = grid.cell_center(c.support[i]);
        for (std::size_t o = 0; o < observables.size(); ++o)
            mean[o] += c.density[i] * observables[o].fn(x);
    }
    return mean;
}

BasinPartition basin_partition(const ModelParams& model, const NoiseKernel& kernel,
                               const Point& x, const PhysicalMeasureSet& set,
                               const Grid3& grid,
                               const std::vector<Observable>& observables,
                               std::size_t n_sequences, std::size_t horizon,
                               std::uint64_t seed, double match_threshold,
                               unsigned n_threads) {
    const std::size_t l = set.components.size();
    std::vector<std::vector<double>> means(l);
    for (std::size_t i = 0; i < l; ++i)
        means[i] = component_mean(set.components[i], grid, observables);

    std::vector<std::atomic<std::uint64_t>> counts(l + 1);
    for (auto& c : counts) c.store(0, std::memory_order_relaxed);

    parallel_for(n_sequences, n_threads, [&](std::size_t s) {
        const std::uint64_t seq_seed = derive_seed(seed, s);
        Point p = x;
        std::vector<double> acc(observables.size(), 0.0);
        bool escaped = false;
        std::size_t steps = 0;
        for (std::size_t k = 0; k < horizon; ++k) {
            for (std::size_t o = 0; o < observables.size(); ++o)
                acc[o] += observables[o].fn(p);
            ++steps;
            const auto next = step(model, p, sequence_value(kernel, seq_seed, k));
            if (!next) {
                escaped = true;
                break;
            }
            p = *next;
        }
        std::size_t pick = l; // unassigned bucket
        if (!escaped && steps > 0) {
            double best = match_threshold;
            for (std::size_t i = 0; i < l; ++i) {
                double d2 = 0.0;
                for (std::size_t o = 0; o < acc.size(); ++o) {
                    const double d = acc[o] / double(steps) - means[i][o];
                    d2 += d * d;
                }
                const double d = std::sqrt(d2);
                if (d <= best) {
                    best = d;
                    pick = i;
                }
            }
        }
        counts[pick].fetch_add(1, std::memory_order_relaxed);
    });

    BasinPartition part;
    part.alpha.resize(l);
    for (std::size_t i = 0; i < l; ++i)
        part.alpha[i] = double(counts[i].load()) / double(n_sequences);
    part.unassigned = double(counts[l].load()) / double(n_sequences);
    return part;
}

std::vector<double> ls_mixture_fit(const Histogram& h, const PhysicalMeasureSet& set) {
    // Components have disjoint supports, so the normal equations decouple.
    std::vector<double> beta(set.components.size(), 0.0);
    for (std::size_t i = 0; i < set.components.size(); ++i) {
        const MeasureComponent& c = set.components[i];
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < c.support.size(); ++k) {
            num += h.masses[c.support[k]] * c.density[k];
            den += c.density[k] * c.density[k];
        }
        beta[i] = den > 0.0 ? std::max(0.0, num / den) : 0.0;
    }
    // Each density sums to 1, so the fitted mixture carries mass sum(beta).
    // Rescale to the histogram's mass on the union of supports: relative LS
    // weights are kept while the common shape-mismatch scale bias cancels.
    double target = 0.0, total = 0.0;
    for (std::size_t i = 0; i < set.components.size(); ++i) {
        target += mass_on_support(h, set.components[i]);
        total += beta[i];
    }
    if (total > 0.0)
        for (double& b : beta) b *= target / total;
    return beta;
}

double mass_on_support(const Histogram& h, const MeasureComponent& c) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.support.size(); ++k)
        if (c.density[k] > 0.0) s += h.masses[c.support[k]];
    return s;
}

Histogram component_to_histogram(const MeasureComponent& c, const Grid3& grid) {
    Histogram h;
    h.grid = grid;
    h.masses.assign(grid.n_cells(), 0.0);
    for (std::size_t k = 0; k < c.support.size(); ++k)
        h.masses[c.support[k]] = c.density[k];
    return h;
}

} // namespace rdyn
