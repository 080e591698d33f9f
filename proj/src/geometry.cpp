#include "rdyn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "rdyn/orbits.hpp"
#include "rdyn/rng.hpp"

namespace rdyn {

TangentVector propagate_tangent(const ModelParams& model, const Point& x,
                                const std::vector<double>& t_list,
                                const TangentVector& v) {
    Point p = x;
    TangentVector w = v;
    for (double t : t_list) {
        const auto next = step(model, p, t);
        if (!next)
            throw std::runtime_error("propagate_tangent: orbit escaped");
        w = rdyn::apply(jacobian(model, p, t), w);
        p = *next;
    }
    return w;
}

namespace {

TangentVector b_direction(const ModelParams& model) {
    return {0.0, model.B[0], model.B[1]};
}

Point uniform_in(const Box3& b, CounterRng& rng) {
    return {b.z_lo + (b.z_hi - b.z_lo) * rng.next_double(),
            b.x1_lo + (b.x1_hi - b.x1_lo) * rng.next_double(),
            b.x2_lo + (b.x2_hi - b.x2_lo) * rng.next_double()};
}

} // namespace

SlopeReport verify_lemma_3_2(const ModelParams& model, const NoiseKernel& kernel,
                             const ConeParams& cone, std::size_t n_samples,
                             std::uint64_t seed, std::size_t max_steps) {
    SlopeReport rep;
    rep.n_samples = n_samples;
    rep.eta = 1.0 / std::max(std::abs(model.sigma * model.lambda1),
                             std::abs(model.sigma * model.lambda2));
    rep.min_norm_ratio = std::numeric_limits<double>::infinity();
    rep.min_linear_steps = std::numeric_limits<std::size_t>::max();
    const TangentVector B = b_direction(model);
    const double norm_bound = norm_max(B) / 10.0;
    std::size_t pass_slope = 0, pass_norm = 0, pass_angle = 0;

    for (std::size_t i = 0; i < n_samples; ++i) {
        CounterRng rng(derive_seed(seed, i));
        const Point x = uniform_in(model.regions.Q_box, rng);
        TangentVector v;
        if (i == 0) {
            v = {1.0, 0.0, 0.0}; // the extremal vertical vector
        } else {
            // slope(v) >= c0: shrink the horizontal part under 1/c0.
            const double u1 = 2.0 * rng.next_double() - 1.0;
            const double u2 = 2.0 * rng.next_double() - 1.0;
            const double cap = 1.0 / (cone.c0 * (1.0 + rng.next_double()));
            v = {1.0, u1 * cap, u2 * cap};
        }
        const double vnorm = norm_max(v);

        Point p = x;
        TangentVector w = v;
        bool returned = false, in_r_seen = false;
        std::size_t steps_to_r = 0;
        for (std::size_t k = 0; k < max_steps; ++k) {
            const double t = sample(kernel, rng);
            const auto next = step(model, p, t);
            if (!next) break;
            w = rdyn::apply(jacobian(model, p, t), w);
            if (!in_r_seen) {
                if (classify(model, p) == RegionLabel::InR)
                    in_r_seen = true;
                else
                    ++steps_to_r;
            }
            p = *next;
            if (classify(model, p) == RegionLabel::InQ) {
                returned = true;
                break;
            }
        }
        if (!returned) continue;
        ++rep.n_returned;
        rep.min_linear_steps = std::min(rep.min_linear_steps, steps_to_r);

        const double sl = slope(w);
        const double ratio = norm_max(w) / vnorm;
        const double ang = angle_to(w, B);
        rep.max_return_slope = std::max(rep.max_return_slope, sl);
        rep.min_norm_ratio = std::min(rep.min_norm_ratio, ratio);
        rep.max_angle_to_B = std::max(rep.max_angle_to_B, ang);
        const bool ok_s = sl <= cone.b0;
        const bool ok_n = ratio >= norm_bound;
        const bool ok_a = ang <= cone.b0;
        pass_slope += ok_s;
        pass_norm += ok_n;
        pass_angle += ok_a;
        if (!(ok_s && ok_n && ok_a) && rep.failures.size() < 32)
            rep.failures.push_back({x, v, i});
    }
    if (rep.n_returned > 0) {
        rep.pass_fraction_slope = double(pass_slope) / double(rep.n_returned);
        rep.pass_fraction_norm = double(pass_norm) / double(rep.n_returned);
        rep.pass_fraction_angle = double(pass_angle) / double(rep.n_returned);
    }
    return rep;
}

CurveReport perturbation_curve(const ModelParams& model, const Point& y,
                               const NoiseKernel& kernel, std::size_t resolution) {
    if (resolution < 2)
        throw std::invalid_argument("perturbation_curve: resolution < 2");
    CurveReport rep;
    rep.s.resize(resolution);
    rep.gamma.resize(resolution);
    const double lo = kernel.lo(), hi = kernel.hi();
    for (std::size_t i = 0; i < resolution; ++i) {
        rep.s[i] = lo + (hi - lo) * double(i) / double(resolution - 1);
        const auto img = step(model, y, rep.s[i]);
        if (!img)
            throw std::runtime_error("perturbation_curve: image escaped");
        rep.gamma[i] = *img;
    }
    rep.derivative.resize(resolution);
    rep.min_slope = std::numeric_limits<double>::infinity();
    rep.min_speed = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < resolution; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == resolution ? i : i + 1;
        const double ds = rep.s[b] - rep.s[a];
        rep.derivative[i] = {(rep.gamma[b].z - rep.gamma[a].z) / ds,
                             (rep.gamma[b].x1 - rep.gamma[a].x1) / ds,
                             (rep.gamma[b].x2 - rep.gamma[a].x2) / ds};
        rep.min_slope = std::min(rep.min_slope, slope(rep.derivative[i]));
        rep.min_speed = std::min(rep.min_speed, norm_max(rep.derivative[i]));
    }
    return rep;
}

DiskSample return_disk(const ModelParams& model, const Point& y,
                       const NoiseKernel& kernel, std::size_t resolution,
                       std::uint64_t seed, const ConeParams& cone,
                       std::size_t max_steps) {
    if (resolution < 3)
        throw std::invalid_argument("return_disk: resolution < 3");
    if (classify(model, y) != RegionLabel::InR)
        throw std::invalid_argument("return_disk: base point not in R");
    DiskSample disk;
    disk.base = y;
    const std::uint64_t interior_seed = derive_seed(seed, 0);
    const double lo = kernel.lo(), hi = kernel.hi();

    // Interior transit: from gamma~(s) = f_s y, iterate the fixed sequence
    // until the orbit is back in R. R(s) = that transit length + 2 is the
    // return time of y along (s, v..., u).
    auto transit = [&](double s) -> std::pair<std::size_t, Point> {
        auto p = step(model, y, s);
        std::size_t k = 0;
        while (p && k < max_steps &&
               classify(model, *p) != RegionLabel::InR) {
            p = step(model, *p, sequence_value(kernel, interior_seed, k));
            ++k;
        }
        if (!p || k == max_steps)
            throw std::runtime_error("return_disk: transit escaped");
        return {k, *p};
    };

    std::vector<double> s_grid(resolution);
    std::vector<Point> staged(resolution);
    disk.return_time_field.resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        s_grid[i] = lo + (hi - lo) * double(i) / double(resolution - 1);
        auto [k, p] = transit(s_grid[i]);
        disk.return_time_field[i] = k + 2;
        staged[i] = p;
    }

    // Largest constant patch of the return-time field containing t0.
    std::size_t center = 0;
    for (std::size_t i = 1; i < resolution; ++i)
        if (std::abs(s_grid[i] - kernel.t0) < std::abs(s_grid[center] - kernel.t0))
            center = i;
    const std::size_t R = disk.return_time_field[center];
    std::size_t patch_lo = center, patch_hi = center;
    while (patch_lo > 0 && disk.return_time_field[patch_lo - 1] == R) --patch_lo;
    while (patch_hi + 1 < resolution && disk.return_time_field[patch_hi + 1] == R)
        ++patch_hi;
    if (patch_hi - patch_lo + 1 < 3)
        throw std::runtime_error("return-time-not-constant");
    disk.return_time = R;

    disk.s_values.assign(s_grid.begin() + patch_lo, s_grid.begin() + patch_hi + 1);
    disk.u_values.resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
        disk.u_values[i] = lo + (hi - lo) * double(i) / double(resolution - 1);

    const std::size_t nu = disk.u_values.size(), ns = disk.s_values.size();
    disk.points.resize(nu * ns);
    for (std::size_t iu = 0; iu < nu; ++iu)
        for (std::size_t is = 0; is < ns; ++is) {
            const Point& w = staged[patch_lo + is];
            const auto img = step(model, w, disk.u_values[iu]);
            if (!img)
                throw std::runtime_error("return_disk: final step escaped");
            disk.points[iu * ns + is] = *img;
        }

    disk.du.resize(nu * ns);
    disk.ds.resize(nu * ns);
    disk.min_slope_du = std::numeric_limits<double>::infinity();
    disk.min_norm_du = std::numeric_limits<double>::infinity();
    disk.min_norm_ds = std::numeric_limits<double>::infinity();
    const TangentVector B = b_direction(model);
    const double norm_bound = norm_max(B) / 10.0;
    bool pass = true;
    auto diff = [](const Point& a, const Point& b, double h) -> TangentVector {
        return {(b.z - a.z) / h, (b.x1 - a.x1) / h, (b.x2 - a.x2) / h};
    };
    for (std::size_t iu = 0; iu < nu; ++iu)
        for (std::size_t is = 0; is < ns; ++is) {
            const std::size_t ua = iu == 0 ? 0 : iu - 1;
            const std::size_t ub = iu + 1 == nu ? iu : iu + 1;
            const std::size_t sa = is == 0 ? 0 : is - 1;
            const std::size_t sb = is + 1 == ns ? is : is + 1;
            disk.du[iu * ns + is] =
                diff(disk.points[ua * ns + is], disk.points[ub * ns + is],
                     disk.u_values[ub] - disk.u_values[ua]);
            disk.ds[iu * ns + is] =
                diff(disk.points[iu * ns + sa], disk.points[iu * ns + sb],
                     disk.s_values[sb] - disk.s_values[sa]);
            const TangentVector& gu = disk.du[iu * ns + is];
            const TangentVector& gs = disk.ds[iu * ns + is];
            disk.min_slope_du = std::min(disk.min_slope_du, slope(gu));
            disk.max_slope_ds = std::max(disk.max_slope_ds, slope(gs));
            disk.min_norm_du = std::min(disk.min_norm_du, norm_max(gu));
            disk.min_norm_ds = std::min(disk.min_norm_ds, norm_max(gs));
            disk.max_angle_ds_to_B =
                std::max(disk.max_angle_ds_to_B, angle_to(gs, B));
            if (slope(gu) < cone.c0 || slope(gs) > cone.b0 ||
                norm_max(gs) < norm_bound || norm_max(gu) < 0.5)
                pass = false;
        }
    disk.bounds_pass = pass;

    for (std::size_t i = 0; i < disk.points.size(); ++i)
        for (std::size_t j = i + 1; j < disk.points.size(); ++j) {
            const Point &a = disk.points[i], &b = disk.points[j];
            const double d = std::max({std::abs(a.z - b.z), std::abs(a.x1 - b.x1),
                                       std::abs(a.x2 - b.x2)});
            disk.diameter = std::max(disk.diameter, d);
        }
    return disk;
}

namespace {

// Smallest singular value of a 3x3 matrix via cyclic Jacobi on M^T M.
double smallest_singular_value(const Mat3& m) {
    std::array<std::array<double, 3>, 3> a{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) a[i][j] += m[k][i] * m[k][j];
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    const double lmin =
        std::max(0.0, std::min({a[0][0], a[1][1], a[2][2]}));
    return std::sqrt(lmin);
}

} // namespace

BallReport verify_ball(const ModelParams& model, const NoiseKernel& kernel,
                       const Point& x, std::size_t n_sequences,
                       double grid_spacing, std::uint64_t seed,
                       std::size_t screen_sequences, std::size_t screen_horizon) {
    const RecurrenceReport screen =
        classify_recurrence(model, kernel, x, screen_sequences, screen_horizon,
                            /*burn_in=*/0, derive_seed(seed, 0x5C12EE17ULL));
    if (!screen.return_times_sequence_independent ||
        screen.common_first_returns.size() < 3)
        throw std::runtime_error("screen-failed");

    BallReport rep;
    rep.n_sequences = n_sequences;
    rep.grid_spacing = grid_spacing;
    for (int i = 0; i < 3; ++i)
        rep.return_steps[i] = screen.common_first_returns[i];
    const std::size_t n_steps = rep.return_steps[2];

    // Deterministic t0-orbit image at the third return.
    auto advance = [&](const Point& start, auto&& t_at) -> std::optional<Point> {
        Point p = start;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const auto next = step(model, p, t_at(k));
            if (!next) return std::nullopt;
            p = *next;
        }
        return p;
    };
    const auto c = advance(x, [&](std::size_t) { return kernel.t0; });
    if (!c) throw std::runtime_error("verify_ball: t0-orbit escaped");
    rep.center = *c;

    // Mark visited cells of the local grid around the center.
    auto key_of = [&](const Point& p) -> std::uint64_t {
        auto idx = [&](double d) {
            const auto i = static_cast<long long>(std::floor(d / grid_spacing));
            return static_cast<std::uint64_t>(i + 0x100000) & 0x1FFFFF;
        };
        return idx(p.z - rep.center.z) | (idx(p.x1 - rep.center.x1) << 21) |
               (idx(p.x2 - rep.center.x2) << 42);
    };
    std::unordered_set<std::uint64_t> visited;
    for (std::size_t s = 0; s < n_sequences; ++s) {
        const std::uint64_t seq_seed = derive_seed(seed, s);
        const auto p = advance(
            x, [&](std::size_t k) { return sequence_value(kernel, seq_seed, k); });
        if (p) visited.insert(key_of(*p));
    }
    rep.n_visited_cells = visited.size();

    // Largest m such that every cell of the cube [-m, m)^3 (cell indices)
    // is visited; the cube covers the max-norm ball of radius m * spacing.
    auto cube_covered = [&](long long m) {
        for (long long i = -m; i < m; ++i)
            for (long long j = -m; j < m; ++j)
                for (long long k = -m; k < m; ++k) {
                    auto enc = [&](long long v) {
                        return static_cast<std::uint64_t>(v + 0x100000) & 0x1FFFFF;
                    };
                    if (!visited.count(enc(i) | (enc(j) << 21) | (enc(k) << 42)))
                        return false;
                }
        return true;
    };
    long long m = 0;
    while (cube_covered(m + 1)) ++m;
    rep.radius = double(m) * grid_spacing;
    rep.k_empirical = rep.radius / kernel.epsilon;

    // D_{i,j,k} phi by central differences in the noise values used at the
    // three return steps of the t0 sequence.
    const double h = 1e-6 * kernel.epsilon;
    Mat3 dphi{};
    for (int col = 0; col < 3; ++col) {
        const std::size_t slot = rep.return_steps[col] - 1;
        auto shifted = [&](double delta) {
            return advance(x, [&](std::size_t k) {
                return kernel.t0 + (k == slot ? delta : 0.0);
            });
        };
        const auto plus = shifted(h), minus = shifted(-h);
        if (!plus || !minus)
            throw std::runtime_error("verify_ball: derivative orbit escaped");
        dphi[0][col] = (plus->z - minus->z) / (2 * h);
        dphi[1][col] = (plus->x1 - minus->x1) / (2 * h);
        dphi[2][col] = (plus->x2 - minus->x2) / (2 * h);
    }
    rep.sigma_min = smallest_singular_value(dphi);
    return rep;
}

} // namespace rdyn
