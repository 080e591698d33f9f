#pragma once

#include <cstdint>
#include <vector>

#include "rdyn/model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/orbits.hpp"

namespace rdyn {

// Regular 3D grid over a box, with one extra absorbing Outside cell at
// index n_cells().
struct Grid3 {
    Box3 bounds;
    std::size_t n_z{0}, n_1{0}, n_2{0};

    std::size_t n_cells() const { return n_z * n_1 * n_2; }
    std::size_t outside_index() const { return n_cells(); }

    double dz() const { return (bounds.z_hi - bounds.z_lo) / double(n_z); }
    double d1() const { return (bounds.x1_hi - bounds.x1_lo) / double(n_1); }
    double d2() const { return (bounds.x2_hi - bounds.x2_lo) / double(n_2); }
    double cell_volume() const { return dz() * d1() * d2(); }

    // Index of the cell containing p; outside_index() when out of bounds.
    std::size_t cell_of(const Point& p) const;
    Point cell_center(std::size_t idx) const;
    Box3 cell_box(std::size_t idx) const;

    friend bool operator==(const Grid3&, const Grid3&) = default;
};

// Default carrier covering U_box and Q'_box of the given model, with the
// z = 0 plane on a cell boundary for every even resolution.
Grid3 default_grid(const ModelParams& model, std::size_t n);

struct Histogram {
    Grid3 grid;
    std::vector<double> masses; // dense, size n_cells()
    double escaped_mass{0.0};

    double total() const;
};

// Sparse row-stochastic transition matrix in CSR layout; the Outside row
// is the identity (absorbing).
struct UlamOperator {
    Grid3 grid;
    std::size_t samples_per_cell{0};
    std::vector<std::size_t> row_ptr; // size n_cells()+2
    std::vector<std::uint32_t> cols;
    std::vector<double> probs;

    std::size_t n_states() const { return grid.n_cells() + 1; }
    double row_sum(std::size_t row) const;
};

// One ergodic component of the discretized dynamics.
struct MeasureComponent {
    std::vector<std::uint32_t> support; // sorted cell indices
    std::vector<double> density;        // aligned with support, sums to 1
    bool intersects_Q{false};
    double stationarity_residual_l1{0.0}; // ||pi P - pi||_1 achieved
};

struct PhysicalMeasureSet {
    std::vector<MeasureComponent> components;
    std::size_t count_l{0}; // components whose support intersects Q
};

struct BasinPartition {
    std::vector<double> alpha; // per component
    double unassigned{0.0};
};

struct AbsContinuityReport {
    std::vector<double> max_density;    // per refinement level
    std::vector<double> density_ratio;  // level i+1 / level i
    bool bounded{false};                // all ratios within the given factor
};

// Monte Carlo estimate of the Cesaro push-forward average: mass deposited
// at the cells of f^j x for j = 0..n-1, averaged over sampled sequences.
// Time indices past an escape accumulate in escaped_mass.
Histogram cesaro_measure(const ModelParams& model, const NoiseKernel& kernel,
                         const Point& x, std::size_t n, std::size_t n_sequences,
                         const Grid3& grid, std::uint64_t seed,
                         unsigned n_threads = 1);

// Row i is the empirical destination distribution of step(x, t) with x
// uniform in cell i and t drawn from the kernel.
UlamOperator build_ulam(const ModelParams& model, const NoiseKernel& kernel,
                        const Grid3& grid, std::size_t samples_per_cell,
                        std::uint64_t seed, unsigned n_threads = 1);

// Recurrent communicating classes of the positive-transition graph
// (excluding the absorbing Outside cell), each with its stationary
// distribution solved to ||pi P - pi||_1 <= tol by damped power iteration.
// Throws std::runtime_error when an iteration budget is exhausted.
PhysicalMeasureSet stationary_components(const ModelParams& model,
                                         const UlamOperator& P,
                                         double tol = 1e-10,
                                         std::size_t max_iter = 100000);

// Max over the observable family of the defect of the stationarity
// identity, with cell-center quadrature in space and n_quadrature nodes
// over the kernel support.
double stationarity_residual(const Histogram& mu, const ModelParams& model,
                             const NoiseKernel& kernel,
                             const std::vector<Observable>& observables,
                             std::size_t n_quadrature);

// Symmetrized overlap fraction: mass of each density on the other's
// support cells, halved.
double mutual_singularity(const MeasureComponent& m1, const MeasureComponent& m2);

// Density proxy (max cell mass / cell volume) across a refinement ladder;
// bounded when each step changes it by at most max_factor.
AbsContinuityReport abs_continuity_diagnostic(
    const std::vector<Histogram>& refinements, double max_factor = 4.0);

// Expectation of each observable under the component density (cell-center
// quadrature).
std::vector<double> component_mean(const MeasureComponent& c, const Grid3& grid,
                                   const std::vector<Observable>& observables);

// Per-sequence Birkhoff-vector matching to the nearest component mean in
// the observable space; sequences beyond match_threshold (or escaped) fall
// into the unassigned bucket.
BasinPartition basin_partition(const ModelParams& model, const NoiseKernel& kernel,
                               const Point& x, const PhysicalMeasureSet& set,
                               const Grid3& grid,
                               const std::vector<Observable>& observables,
                               std::size_t n_sequences, std::size_t horizon,
                               std::uint64_t seed, double match_threshold,
                               unsigned n_threads = 1);

// Least-squares fit of the histogram onto the component densities; with
// disjoint supports the normal equations are diagonal. The weights are
// rescaled to preserve the histogram's mass on the supports, so a common
// density-shape mismatch cannot bias every weight at once.
std::vector<double> ls_mixture_fit(const Histogram& h, const PhysicalMeasureSet& set);

// Mass of the histogram on the support cells of the component.
double mass_on_support(const Histogram& h, const MeasureComponent& c);

Histogram component_to_histogram(const MeasureComponent& c, const Grid3& grid);

} // namespace rdyn
