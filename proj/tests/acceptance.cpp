// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] = path to the CLI binary, argv[2] = shipped config file.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdyn/config.hpp"
#include "rdyn/geometry.hpp"
#include "rdyn/measures.hpp"
#include "rdyn/model.hpp"
#include "rdyn/noise.hpp"
#include "rdyn/orbits.hpp"
#include "rdyn/rng.hpp"

using namespace rdyn;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL")
              << " — " << detail << "\n";
    std::cout.flush();
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

// ---- criterion 1: analytic Jacobians vs central finite differences ----

void criterion_1(const ModelParams& m) {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(31);
    const Box3 L = m.regions.L_box, R = m.regions.R_box;
    auto draw = [&](const Box3& b) {
        return Point{b.z_lo + rng.next_double() * (b.z_hi - b.z_lo),
                     b.x1_lo + rng.next_double() * (b.x1_hi - b.x1_lo),
                     b.x2_lo + rng.next_double() * (b.x2_hi - b.x2_lo)};
    };
    const double h = 1e-6;
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t i = 0; checked < 1000 && i < 20000; ++i) {
        const Point x = (i % 2 == 0) ? draw(L) : draw(R);
        // skip the band where the map switches branch under the FD probe
        if (R.inflated(1e-4).contains(x) && !R.inflated(-1e-4).contains(x))
            continue;
        const double t = 0.04 + 0.02 * rng.next_double();
        if (!step(m, x, t)) continue;
        const Mat3 J = jacobian(m, x, t);
        double scale = 0.0;
        for (const auto& row : J)
            for (double v : row) scale = std::max(scale, std::abs(v));
        bool ok = true;
        for (int c = 0; c < 3 && ok; ++c) {
            Point xp = x, xm = x;
            double* pp[3] = {&xp.z, &xp.x1, &xp.x2};
            double* pm[3] = {&xm.z, &xm.x1, &xm.x2};
            *pp[c] += h;
            *pm[c] -= h;
            const auto fp = step(m, xp, t), fm = step(m, xm, t);
            if (!fp || !fm) { ok = false; break; }
            const double fd[3] = {(fp->z - fm->z) / (2 * h),
                                  (fp->x1 - fm->x1) / (2 * h),
                                  (fp->x2 - fm->x2) / (2 * h)};
            for (int r = 0; r < 3; ++r)
                worst = std::max(worst, std::abs(J[r][c] - fd[r]) / scale);
        }
        if (ok) ++checked;
    }
    const double dt = seconds_since(t0);
    report(1, checked == 1000 && worst <= 1e-6 && dt < 5.0,
           std::to_string(checked) + " samples, max relative error " +
               fmt(worst) + ", " + fmt(dt, 3) + " s");
}

// ---- criterion 2: stationarity residual, quadrature consistency ----

struct Built {
    Grid3 grid;
    PhysicalMeasureSet set;
};

Built build_components(const ModelParams& m, const NoiseKernel& k,
                       std::size_t n, std::size_t samples, unsigned threads) {
    Built b;
    b.grid = default_grid(m, n);
    const auto P = build_ulam(m, k, b.grid, samples, 42, threads);
    b.set = stationary_components(m, P);
    return b;
}

Built criterion_2(const ModelParams& m, const NoiseKernel& k,
                  const std::vector<Observable>& obs) {
    const auto t0 = std::chrono::steady_clock::now();
    const Built b64 = build_components(m, k, 64, 256, 8);
    double max_l1 = 0.0;
    for (const auto& c : b64.set.components)
        max_l1 = std::max(max_l1, c.stationarity_residual_l1);
    double r64 = 0.0;
    for (const auto& c : b64.set.components)
        r64 = std::max(r64, stationarity_residual(
                                component_to_histogram(c, b64.grid), m, k, obs, 32));
    const double dt64 = seconds_since(t0);

    const Built b128 = build_components(m, k, 128, 256, 8);
    double r128 = 0.0;
    for (const auto& c : b128.set.components)
        r128 = std::max(r128, stationarity_residual(
                                 component_to_histogram(c, b128.grid), m, k, obs, 32));
    const double ratio = r64 / r128;
    report(2, max_l1 <= 1e-10 && ratio >= 2.0 && dt64 < 60.0,
           "||piP-pi||_1 = " + fmt(max_l1) + ", Eq.-3 residual " + fmt(r64) +
               " (64^3) -> " + fmt(r128) + " (128^3), ratio " + fmt(ratio, 3) +
               ", 64^3 stage " + fmt(dt64, 3) + " s");
    return b64;
}

// ---- criterion 3: count_l stable across grids and noise levels ----

void criterion_3(const ModelParams& m) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (double eps : {0.005, 0.01, 0.02}) {
        const NoiseKernel k{KernelKind::Uniform, 0.05, eps, {}};
        const auto c48 = build_components(m, k, 48, 64, 8).set.count_l;
        const auto c96 = build_components(m, k, 96, 64, 8).set.count_l;
        ok = ok && c48 == c96 && c48 >= 1;
        detail += "eps=" + fmt(eps) + ": " + std::to_string(c48) + "/" +
                  std::to_string(c96) + "  ";
    }
    const double dt = seconds_since(t0);
    report(3, ok && dt < 300.0,
           "count_l at 48^3/96^3: " + detail + "(" + fmt(dt, 3) + " s)");
}

// ---- criterion 4: mutual singularity and Cesaro support mass ----

void criterion_4(const ModelParams& m, const NoiseKernel& k, const Built& b,
                 const Point& x0) {
    double overlap = 0.0;
    for (std::size_t i = 0; i < b.set.components.size(); ++i)
        for (std::size_t j = i + 1; j < b.set.components.size(); ++j)
            overlap = std::max(
                overlap, mutual_singularity(b.set.components[i], b.set.components[j]));

    const auto h = cesaro_measure(m, k, x0, 10000, 8, b.grid, 77, 8);
    double own = 0.0;
    for (const auto& c : b.set.components)
        own = std::max(own, mass_on_support(h, c));
    report(4, overlap == 0.0 && own >= 0.95,
           std::to_string(b.set.components.size()) + " component(s), max pairwise overlap " +
               fmt(overlap) + ", Cesaro own-support mass " + fmt(own, 6) +
               " at n = 1e4");
}

// ---- criterion 5: absolute-continuity proxy with Dirac control ----

void criterion_5(const ModelParams& m, const NoiseKernel& k) {
    std::vector<Histogram> levels;
    for (std::size_t n : {32, 64}) {
        const Built b = build_components(m, k, n, 64, 8);
        if (b.set.components.empty()) {
            report(5, false, "no components at " + std::to_string(n) + "^3");
            return;
        }
        levels.push_back(component_to_histogram(b.set.components[0], b.grid));
    }
    const auto diag = abs_continuity_diagnostic(levels, 4.0);

    std::vector<Histogram> dirac;
    for (std::size_t n : {32, 64}) {
        Histogram h;
        h.grid = default_grid(m, n);
        h.masses.assign(h.grid.n_cells(), 0.0);
        h.masses[h.grid.cell_of({0.09, 1.0, 1.0})] = 1.0;
        dirac.push_back(h);
    }
    const auto ctrl = abs_continuity_diagnostic(dirac, 4.0);
    report(5, diag.bounded && !ctrl.bounded,
           "component density ratio " + fmt(diag.density_ratio[0], 4) +
               " <= 4, Dirac control ratio " + fmt(ctrl.density_ratio[0], 4) +
               " flagged");
}

// ---- criterion 6: Lemma 3.2 cone verification ----

void criterion_6(const ModelParams& m, const NoiseKernel& k) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = verify_lemma_3_2(m, k, {10.0, 0.2}, 1000, 11);
    const double dt = seconds_since(t0);
    const bool ok = rep.n_returned > 0 && rep.pass_fraction_slope == 1.0 &&
                    rep.pass_fraction_norm == 1.0 &&
                    rep.pass_fraction_angle == 1.0 && rep.failures.empty() &&
                    dt < 30.0;
    report(6, ok,
           std::to_string(rep.n_returned) + "/" + std::to_string(rep.n_samples) +
               " returned, all conclusions hold; extremes: slope " +
               fmt(rep.max_return_slope, 6) + ", norm ratio " +
               fmt(rep.min_norm_ratio, 6) + ", angle " +
               fmt(rep.max_angle_to_B, 6) + " (" + fmt(dt, 3) + " s)");
}

// ---- criterion 7: Lemma 3.3 curve and Eqs. 10-11 disk bounds ----

void criterion_7(const ModelParams& m, const NoiseKernel& k) {
    const auto curve = perturbation_curve(m, fold_base_point(), k, 1000);
    double dev = 0.0;
    for (const auto& d : curve.derivative) {
        dev = std::max(dev, std::abs(d.u0 - 1.0));
        dev = std::max(dev, std::abs(d.u1 - m.A[0]));
        dev = std::max(dev, std::abs(d.u2 - m.A[1]));
    }
    const auto disk = return_disk(m, fold_base_point(), k, 33, 17);
    report(7, disk.bounds_pass && dev <= 1e-8,
           "disk bounds pass on " + std::to_string(disk.points.size()) +
               " nodes (R = " + std::to_string(disk.return_time) +
               "), curve derivative deviation " + fmt(dev) + " <= 1e-8");
}

// ---- criterion 8: inner-ball certificates for the regular points ----

void criterion_8(const ModelParams& m, const std::vector<Point>& points) {
    const std::uint64_t seeds[] = {2001, 2002, 2004};
    bool ok = points.size() >= 3;
    std::string detail;
    for (std::size_t i = 0; i < points.size() && ok; ++i) {
        double kvals[2] = {0, 0}, sigma_min = 0;
        int lvl = 0;
        for (double eps : {0.005, 0.01}) {
            const NoiseKernel k{KernelKind::Uniform, 0.05, eps, {}};
            const auto t0 = std::chrono::steady_clock::now();
            const auto rep =
                verify_ball(m, k, points[i], 10000, 0.2 * eps, seeds[i]);
            const double dt = seconds_since(t0);
            ok = ok && rep.radius > 0.0 && dt < 120.0;
            kvals[lvl++] = rep.k_empirical;
            sigma_min = rep.sigma_min;
        }
        const double kratio = std::max(kvals[0], kvals[1]) /
                              std::min(kvals[0], kvals[1]);
        ok = ok && kratio <= 2.0 && sigma_min >= 1e-3;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "point %zu: K = %.3f/%.3f, sigma_min = %.6f; ", i,
                      kvals[0], kvals[1], sigma_min);
        detail += buf;
    }
    report(8, ok, detail.empty() ? "fewer than 3 regular points" : detail);
}

// ---- criterion 9: basin partition vs mixture fit ----

void criterion_9(const ModelParams& m, const NoiseKernel& k, const Point& x0,
                 const std::vector<Observable>& obs) {
    const Built b = build_components(m, k, 48, 64, 8);
    const auto part =
        basin_partition(m, k, x0, b.set, b.grid, obs, 1000, 2000, 3, 0.5, 8);
    double sum = part.unassigned;
    for (double a : part.alpha) sum += a;

    const auto h = cesaro_measure(m, k, x0, 10000, 1000, b.grid, 5, 8);
    const auto beta = ls_mixture_fit(h, b.set);
    bool within = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < part.alpha.size(); ++i) {
        // Agresti-Coull standard error keeps the bound meaningful at the
        // boundary alpha = 0 or 1
        const double n = 1000.0;
        const double p = (part.alpha[i] * n + 2.0) / (n + 4.0);
        const double se = std::sqrt(p * (1.0 - p) / (n + 4.0));
        worst = std::max(worst, std::abs(part.alpha[i] - beta[i]) / (2.0 * se));
        within = within && std::abs(part.alpha[i] - beta[i]) <= 2.0 * se;
    }
    report(9, std::abs(sum - 1.0) <= 1e-12 && part.unassigned <= 0.05 && within,
           "sum(alpha)+unassigned-1 = " + fmt(sum - 1.0) + ", unassigned = " +
               fmt(part.unassigned, 4) + ", |alpha-beta| at " + fmt(worst, 3) +
               " of the 2-SE budget");
}

// ---- criterion 10: byte-identical CLI reruns ----

std::map<std::string, std::string> slurp_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return files;
}

void criterion_10(const std::string& cli, const std::string& config) {
    const fs::path root = fs::path("acceptance_out");
    fs::remove_all(root);
    bool ok = true;
    std::string detail;
    for (const char* cmd : {"validate", "orbit", "returns", "recurrence",
                            "measures", "basin", "geometry", "ball"}) {
        std::map<std::string, std::string> runs[3];
        const unsigned threads[3] = {1, 1, 8};
        for (int r = 0; r < 3; ++r) {
            const fs::path dir = root / cmd / std::to_string(r);
            fs::create_directories(dir);
            const std::string shell = "\"" + cli + "\" --config \"" + config +
                                      "\" --out \"" + dir.string() +
                                      "\" --seed 1 --threads " +
                                      std::to_string(threads[r]) + " " + cmd +
                                      " > \"" + (dir / "stdout.txt").string() +
                                      "\" 2>&1";
            if (std::system(shell.c_str()) != 0) {
                ok = false;
                detail += std::string(cmd) + ": nonzero exit; ";
            }
            runs[r] = slurp_dir(dir);
        }
        if (runs[0] != runs[1]) {
            ok = false;
            detail += std::string(cmd) + ": rerun differs; ";
        }
        if (runs[0] != runs[2]) {
            ok = false;
            detail += std::string(cmd) + ": --threads 8 differs; ";
        }
    }
    report(10, ok,
           ok ? "8 commands byte-identical across reruns and --threads 1 vs 8"
              : detail);
}

// ---- criterion 11: performance floor ----

void criterion_11(const ModelParams& m, const NoiseKernel& k, const Point& x0) {
    auto t0 = std::chrono::steady_clock::now();
    std::size_t steps = 0;
    for (std::uint64_t s = 0; steps < 1000000; ++s) {
        const auto rec = random_orbit(m, k, x0, 1000000 - steps, derive_seed(9, s));
        steps += rec.points.size();
    }
    const double orbit_dt = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto P = build_ulam(m, k, default_grid(m, 64), 64, 42, 8);
    const double ulam_dt = seconds_since(t0);
    report(11, orbit_dt < 1.0 && ulam_dt < 120.0,
           "1e6 orbit steps in " + fmt(orbit_dt, 3) + " s, 64^3 x 64 Ulam (" +
               std::to_string(P.probs.size()) + " nnz) in " + fmt(ulam_dt, 3) +
               " s");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance <cli-binary> <config.ini>\n";
        return 2;
    }
    const ExperimentConfig cfg = parse_config_file(argv[2]);
    const ModelParams& m = cfg.model;
    const NoiseKernel& k = cfg.kernel;
    const auto obs = builtin_observables(m, 0.05, 0.05, 0.05);

    try {
        criterion_1(m);
        const Built b64 = criterion_2(m, k, obs);
        criterion_3(m);
        criterion_4(m, k, b64, cfg.run.x0);
        criterion_5(m, k);
        criterion_6(m, k);
        criterion_7(m, k);
        criterion_8(m, cfg.run.regular_points);
        criterion_9(m, k, cfg.run.x0, obs);
        criterion_10(argv[1], argv[2]);
        criterion_11(m, k, cfg.run.x0);
    } catch (const std::exception& e) {
        std::cout << "aborted: " << e.what() << "\n";
        return 1;
    }
    return g_failures == 0 ? 0 : 1;
}
