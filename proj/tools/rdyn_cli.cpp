// Experiment driver: one subcommand per claim cluster. All outputs embed
// the resolved config hash and seed; reruns with equal config + seed are
// byte-identical regardless of --threads.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdyn/config.hpp"
#include "rdyn/geometry.hpp"
#include "rdyn/measures.hpp"
#include "rdyn/orbits.hpp"
#include "rdyn/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rdyn;

namespace {

struct Cli {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

ExperimentConfig load(const Cli& cli) {
    ExperimentConfig cfg = cli.config_path.empty()
                               ? ExperimentConfig{}
                               : parse_config_file(cli.config_path);
    if (cli.config_path.empty()) cfg.model = default_params();
    if (cli.seed) cfg.run.seed = *cli.seed;
    if (cli.threads) cfg.run.threads = *cli.threads;
    if (!cli.out_dir.empty()) cfg.output.dir = cli.out_dir;
    return cfg;
}

int validate_or_fail(const ExperimentConfig& cfg) {
    const ValidationReport m = validate_params(cfg.model);
    const ValidationReport k = validate_kernel(cfg.kernel, cfg.model.t_star);
    if (m.ok() && k.ok()) return 0;
    for (const auto& r : {m, k})
        for (const ValidationIssue& i : r.issues)
            std::cerr << "validation: " << i.check << ": " << i.detail << "\n";
    return 2;
}

json provenance(const ExperimentConfig& cfg) {
    return {{"config_hash", config_hash(cfg)}, {"seed", cfg.run.seed}};
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_json(const ExperimentConfig& cfg, const std::string& name, json j) {
    if (!cfg.output.json) return;
    j["provenance"] = provenance(cfg);
    write_text(fs::path(cfg.output.dir) / (name + ".json"), j.dump(2) + "\n");
}

std::string csv_header(const ExperimentConfig& cfg) {
    return "# config_hash=" + config_hash(cfg) +
           " seed=" + std::to_string(cfg.run.seed) + "\n";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<Observable> observables(const ExperimentConfig& cfg) {
    const Grid3 g = default_grid(cfg.model, cfg.run.grid_n);
    return builtin_observables(cfg.model, g.dz(), g.d1(), g.d2());
}

int cmd_validate(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    const int rc = validate_or_fail(cfg);
    json j{{"ok", rc == 0}};
    const ValidationReport m = validate_params(cfg.model);
    const ValidationReport k = validate_kernel(cfg.kernel, cfg.model.t_star);
    json issues = json::array();
    for (const auto& r : {m, k})
        for (const ValidationIssue& i : r.issues)
            issues.push_back({{"check", i.check}, {"detail", i.detail}});
    j["issues"] = issues;
    write_json(cfg, "validate", j);
    std::cout << (rc == 0 ? "valid\n" : "invalid\n");
    return rc;
}

int cmd_orbit(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    const OrbitRecord rec = random_orbit(cfg.model, cfg.kernel, cfg.run.x0,
                                         cfg.run.horizon, cfg.run.seed);
    if (cfg.output.csv) {
        std::string csv = csv_header(cfg) + "step,z,x1,x2,label,t_used\n";
        for (std::size_t k = 0; k < rec.points.size(); ++k) {
            const Point& p = rec.points[k];
            csv += std::to_string(k) + "," + num(p.z) + "," + num(p.x1) + "," +
                   num(p.x2) + "," + to_string(rec.labels[k]) + "," +
                   (k < rec.sequence.values.size() ? num(rec.sequence.values[k])
                                                   : std::string("")) +
                   "\n";
        }
        write_text(fs::path(cfg.output.dir) / "orbit.csv", csv);
    }
    write_json(cfg, "orbit",
               {{"n_points", rec.points.size()},
                {"escaped", rec.escaped_at.has_value()},
                {"escaped_at", rec.escaped_at ? json(*rec.escaped_at) : json()}});
    std::cout << "orbit: " << rec.points.size() << " points\n";
    return 0;
}

int cmd_returns(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    const OrbitRecord rec = random_orbit(cfg.model, cfg.kernel, cfg.run.x0,
                                         cfg.run.horizon, cfg.run.seed);
    const ReturnTimes rt = return_times(rec);
    const auto cum = cumulative_returns(rt);
    if (cfg.output.csv) {
        std::string csv = csv_header(cfg) + "k,r_k,R_k\n";
        for (std::size_t k = 0; k < rt.times.size(); ++k)
            csv += std::to_string(k + 1) + "," + std::to_string(rt.times[k]) +
                   "," + std::to_string(cum[k]) + "\n";
        write_text(fs::path(cfg.output.dir) / "returns.csv", csv);
    }
    write_json(cfg, "returns",
               {{"n_returns", rt.times.size()}, {"truncated", rt.truncated}});
    std::cout << "returns: " << rt.times.size() << "\n";
    return 0;
}

int cmd_recurrence(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    const RecurrenceReport rep =
        classify_recurrence(cfg.model, cfg.kernel, cfg.run.x0, cfg.run.n_sequences,
                            cfg.run.horizon, cfg.run.burn_in, cfg.run.seed);
    write_json(cfg, "recurrence",
               {{"n_sequences", rep.n_sequences},
                {"fraction_recurrent", rep.fraction_recurrent},
                {"max_return_gap", rep.max_return_gap},
                {"sequence_independent", rep.return_times_sequence_independent},
                {"common_first_returns", rep.common_first_returns}});
    std::cout << "recurrence: fraction=" << rep.fraction_recurrent
              << " max_gap=" << rep.max_return_gap << "\n";
    return 0;
}

int cmd_measures(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    const Grid3 grid = default_grid(cfg.model, cfg.run.grid_n);
    const UlamOperator P =
        build_ulam(cfg.model, cfg.kernel, grid, cfg.run.samples_per_cell,
                   derive_seed(cfg.run.seed, 1), cfg.run.threads);
    const PhysicalMeasureSet set = stationary_components(cfg.model, P);
    const auto obs = observables(cfg);

    json comps = json::array();
    for (std::size_t i = 0; i < set.components.size(); ++i) {
        const MeasureComponent& c = set.components[i];
        const Histogram h = component_to_histogram(c, grid);
        comps.push_back(
            {{"support_cells", c.support.size()},
             {"intersects_Q", c.intersects_Q},
             {"power_residual", c.stationarity_residual_l1},
             {"eq3_residual", stationarity_residual(h, cfg.model, cfg.kernel, obs,
                                                    cfg.run.n_quadrature)},
             {"mean", component_mean(c, grid, obs)}});
    }
    json overlap = json::array();
    for (std::size_t i = 0; i < set.components.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < set.components.size(); ++j)
            row.push_back(i == j ? 1.0
                                 : mutual_singularity(set.components[i],
                                                      set.components[j]));
        overlap.push_back(row);
    }
    write_json(cfg, "measures",
               {{"grid_n", cfg.run.grid_n},
                {"count_l", set.count_l},
                {"n_components", set.components.size()},
                {"components", comps},
                {"overlap", overlap}});
    if (cfg.output.csv) {
        std::string csv = csv_header(cfg) + "component,cell,z,x1,x2,density\n";
        for (std::size_t i = 0; i < set.components.size(); ++i)
            for (std::size_t k = 0; k < set.components[i].support.size(); ++k) {
                const Point c = grid.cell_center(set.components[i].support[k]);
                csv += std::to_string(i) + "," +
                       std::to_string(set.components[i].support[k]) + "," +
                       num(c.z) + "," + num(c.x1) + "," + num(c.x2) + "," +
                       num(set.components[i].density[k]) + "\n";
            }
        write_text(fs::path(cfg.output.dir) / "components.csv", csv);
    }
    std::cout << "measures: count_l=" << set.count_l << "\n";
    return 0;
}

int cmd_basin(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    const Grid3 grid = default_grid(cfg.model, cfg.run.grid_n);
    const UlamOperator P =
        build_ulam(cfg.model, cfg.kernel, grid, cfg.run.samples_per_cell,
                   derive_seed(cfg.run.seed, 1), cfg.run.threads);
    const PhysicalMeasureSet set = stationary_components(cfg.model, P);
    const auto obs = observables(cfg);
    const BasinPartition part = basin_partition(
        cfg.model, cfg.kernel, cfg.run.x0, set, grid, obs, cfg.run.n_sequences,
        cfg.run.horizon, derive_seed(cfg.run.seed, 2), cfg.run.match_threshold,
        cfg.run.threads);
    write_json(cfg, "basin",
               {{"alpha", part.alpha}, {"unassigned", part.unassigned}});
    std::cout << "basin: unassigned=" << part.unassigned << "\n";
    return 0;
}

int cmd_geometry(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    const ConeParams cone{cfg.run.c0, cfg.run.b0};
    const SlopeReport rep =
        verify_lemma_3_2(cfg.model, cfg.kernel, cone, cfg.run.n_samples,
                         derive_seed(cfg.run.seed, 3));
    const CurveReport curve = perturbation_curve(cfg.model, cfg.run.disk_base,
                                                 cfg.kernel, cfg.run.resolution);
    const DiskSample disk =
        return_disk(cfg.model, cfg.run.disk_base, cfg.kernel, cfg.run.resolution,
                    derive_seed(cfg.run.seed, 4), cone);
    write_json(
        cfg, "geometry",
        {{"lemma_3_2",
          {{"n_samples", rep.n_samples},
           {"n_returned", rep.n_returned},
           {"pass_fraction_slope", rep.pass_fraction_slope},
           {"pass_fraction_norm", rep.pass_fraction_norm},
           {"pass_fraction_angle", rep.pass_fraction_angle},
           {"min_norm_ratio", rep.min_norm_ratio},
           {"max_return_slope", rep.max_return_slope},
           {"max_angle_to_B", rep.max_angle_to_B},
           {"eta", rep.eta},
           {"min_linear_steps", rep.min_linear_steps}}},
         {"curve", {{"min_slope", curve.min_slope}, {"min_speed", curve.min_speed}}},
         {"disk",
          {{"return_time", disk.return_time},
           {"bounds_pass", disk.bounds_pass},
           {"min_slope_du", disk.min_slope_du},
           {"max_slope_ds", disk.max_slope_ds},
           {"min_norm_du", disk.min_norm_du},
           {"min_norm_ds", disk.min_norm_ds},
           {"max_angle_ds_to_B", disk.max_angle_ds_to_B},
           {"diameter", disk.diameter}}}});
    if (cfg.output.csv) {
        std::string csv = csv_header(cfg) + "iu,is,u,s,z,x1,x2\n";
        const std::size_t ns = disk.s_values.size();
        for (std::size_t iu = 0; iu < disk.u_values.size(); ++iu)
            for (std::size_t is = 0; is < ns; ++is) {
                const Point& p = disk.points[iu * ns + is];
                csv += std::to_string(iu) + "," + std::to_string(is) + "," +
                       num(disk.u_values[iu]) + "," + num(disk.s_values[is]) +
                       "," + num(p.z) + "," + num(p.x1) + "," + num(p.x2) + "\n";
            }
        write_text(fs::path(cfg.output.dir) / "disk.csv", csv);
    }
    std::cout << "geometry: pass_slope=" << rep.pass_fraction_slope
              << " disk_pass=" << disk.bounds_pass << "\n";
    return 0;
}

int cmd_ball(const Cli& cli) {
    const ExperimentConfig cfg = load(cli);
    if (int rc = validate_or_fail(cfg)) return rc;
    std::vector<Point> points = cfg.run.regular_points;
    if (points.empty()) points.push_back(cfg.run.x0);
    json reports = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        json entry{{"x0", {points[i].z, points[i].x1, points[i].x2}}};
        try {
            const BallReport rep = verify_ball(
                cfg.model, cfg.kernel, points[i], cfg.run.n_sequences,
                cfg.run.grid_spacing, derive_seed(cfg.run.seed, 5 + i));
            entry["radius"] = rep.radius;
            entry["k_empirical"] = rep.k_empirical;
            entry["grid_spacing"] = rep.grid_spacing;
            entry["n_visited_cells"] = rep.n_visited_cells;
            entry["return_steps"] = rep.return_steps;
            entry["sigma_min"] = rep.sigma_min;
        } catch (const std::runtime_error& e) {
            // a marginally regular point can fail the Monte Carlo screen
            entry["error"] = e.what();
        }
        reports.push_back(entry);
    }
    write_json(cfg, "ball", {{"reports", reports}});
    std::cout << "ball: " << reports.size() << " report(s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-tangency simulator and ergodic-numerics toolkit"};
    app.require_subcommand(1);
    Cli cli;
    app.add_option("--config", cli.config_path, "INI config path");
    app.add_option("--out", cli.out_dir, "output directory (overrides config)");
    std::uint64_t seed_opt = 0;
    unsigned threads_opt = 0;
    auto* so = app.add_option("--seed", seed_opt, "seed (overrides config)");
    auto* to = app.add_option("--threads", threads_opt, "workers (0 = auto)");

    int (*handler)(const Cli&) = nullptr;
    for (auto [name, fn] : {std::pair{"validate", &cmd_validate},
                            std::pair{"orbit", &cmd_orbit},
                            std::pair{"returns", &cmd_returns},
                            std::pair{"recurrence", &cmd_recurrence},
                            std::pair{"measures", &cmd_measures},
                            std::pair{"basin", &cmd_basin},
                            std::pair{"geometry", &cmd_geometry},
                            std::pair{"ball", &cmd_ball}}) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();
        sub->callback([&handler, fn] { handler = fn; });
    }
    CLI11_PARSE(app, argc, argv);
    if (so->count()) cli.seed = seed_opt;
    if (to->count()) cli.threads = threads_opt;

    try {
        return handler(cli);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
