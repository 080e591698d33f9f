#include "rdyn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rdyn {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + v);
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("config: bad integer for '" + key + "': " + v);
    return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v,
                               std::size_t n) {
    std::istringstream in(v);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(key, tok));
    if (out.size() != n)
        throw ConfigError("config: '" + key + "' needs " + std::to_string(n) +
                          " numbers, got " + std::to_string(out.size()));
    return out;
}

Box3 to_box(const std::string& key, const std::string& v) {
    const auto d = to_doubles(key, v, 6);
    return {d[0], d[1], d[2], d[3], d[4], d[5]};
}

Point to_point(const std::string& key, const std::string& v) {
    const auto d = to_doubles(key, v, 3);
    return {d[0], d[1], d[2]};
}

void apply_model(ModelParams& m, const std::string& key, const std::string& v) {
    HigherOrder& h = m.higher_order;
    if (key == "sigma") m.sigma = to_double(key, v);
    else if (key == "lambda1") m.lambda1 = to_double(key, v);
    else if (key == "lambda2") m.lambda2 = to_double(key, v);
    else if (key == "a") m.a = to_double(key, v);
    else if (key == "A") { auto d = to_doubles(key, v, 2); m.A = {d[0], d[1]}; }
    else if (key == "B") { auto d = to_doubles(key, v, 2); m.B = {d[0], d[1]}; }
    else if (key == "b") { auto d = to_doubles(key, v, 2); m.b = {d[0], d[1]}; }
    else if (key == "C") {
        auto d = to_doubles(key, v, 4);
        m.C = {{{d[0], d[1]}, {d[2], d[3]}}};
    } else if (key == "q0") { auto d = to_doubles(key, v, 2); m.q0 = {d[0], d[1]}; }
    else if (key == "t_star") m.t_star = to_double(key, v);
    else if (key == "h_z3") h.h_z3 = to_double(key, v);
    else if (key == "h_t2") h.h_t2 = to_double(key, v);
    else if (key == "h_x1sq") h.h_x1sq = to_double(key, v);
    else if (key == "h_x2sq") h.h_x2sq = to_double(key, v);
    else if (key == "H1_z2") h.H1_z2 = to_double(key, v);
    else if (key == "H2_z2") h.H2_z2 = to_double(key, v);
    else if (key == "H1_t2") h.H1_t2 = to_double(key, v);
    else if (key == "H2_t2") h.H2_t2 = to_double(key, v);
    else throw ConfigError("config: unknown key 'model." + key + "'");
}

void apply_regions(RegionGeometry& g, const std::string& key,
                   const std::string& v) {
    if (key == "L") g.L_box = to_box(key, v);
    else if (key == "Qprime") g.Qprime_box = to_box(key, v);
    else if (key == "Q") g.Q_box = to_box(key, v);
    else if (key == "R") g.R_box = to_box(key, v);
    else if (key == "U") g.U_box = to_box(key, v);
    else if (key == "zeta") g.zeta = to_double(key, v);
    else throw ConfigError("config: unknown key 'regions." + key + "'");
}

void apply_noise(NoiseKernel& k, const std::string& key, const std::string& v) {
    if (key == "kind") {
        if (v == "uniform") k.kind = KernelKind::Uniform;
        else if (v == "abscontinuous") k.kind = KernelKind::AbsContinuous;
        else throw ConfigError("config: unknown noise kind '" + v + "'");
    } else if (key == "t0") k.t0 = to_double(key, v);
    else if (key == "epsilon") k.epsilon = to_double(key, v);
    else if (key == "density") {
        // alternating "t value" pairs
        std::istringstream in(v);
        std::string a, b;
        k.density.clear();
        while (in >> a) {
            if (!(in >> b))
                throw ConfigError("config: noise.density needs t/value pairs");
            k.density.push_back({to_double(key, a), to_double(key, b)});
        }
    } else throw ConfigError("config: unknown key 'noise." + key + "'");
}

void apply_run(RunConfig& r, const std::string& key, const std::string& v) {
    if (key == "seed") r.seed = to_u64(key, v);
    else if (key == "x0") r.x0 = to_point(key, v);
    else if (key == "regular_points") {
        r.regular_points.clear();
        std::string group;
        std::istringstream in(v);
        while (std::getline(in, group, ',')) {
            const std::string g = trim(group);
            if (!g.empty()) r.regular_points.push_back(to_point(key, g));
        }
    } else if (key == "disk_base") r.disk_base = to_point(key, v);
    else if (key == "horizon") r.horizon = to_u64(key, v);
    else if (key == "n_sequences") r.n_sequences = to_u64(key, v);
    else if (key == "burn_in") r.burn_in = to_u64(key, v);
    else if (key == "grid_n") r.grid_n = to_u64(key, v);
    else if (key == "samples_per_cell") r.samples_per_cell = to_u64(key, v);
    else if (key == "resolution") r.resolution = to_u64(key, v);
    else if (key == "n_samples") r.n_samples = to_u64(key, v);
    else if (key == "n_quadrature") r.n_quadrature = to_u64(key, v);
    else if (key == "grid_spacing") r.grid_spacing = to_double(key, v);
    else if (key == "match_threshold") r.match_threshold = to_double(key, v);
    else if (key == "c0") r.c0 = to_double(key, v);
    else if (key == "b0") r.b0 = to_double(key, v);
    else if (key == "threads") r.threads = unsigned(to_u64(key, v));
    else throw ConfigError("config: unknown key 'run." + key + "'");
}

void apply_output(OutputConfig& o, const std::string& key, const std::string& v) {
    if (key == "dir") o.dir = v;
    else if (key == "formats") {
        o.csv = o.json = false;
        std::istringstream in(v);
        std::string tok;
        while (in >> tok) {
            if (tok == "csv") o.csv = true;
            else if (tok == "json") o.json = true;
            else throw ConfigError("config: unknown format '" + tok + "'");
        }
    } else throw ConfigError("config: unknown key 'output." + key + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const Box3& b) {
    return fmt(b.z_lo) + " " + fmt(b.z_hi) + " " + fmt(b.x1_lo) + " " +
           fmt(b.x1_hi) + " " + fmt(b.x2_lo) + " " + fmt(b.x2_hi);
}

std::string fmt(const Point& p) {
    return fmt(p.z) + " " + fmt(p.x1) + " " + fmt(p.x2);
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    cfg.model = default_params();
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ConfigError("config: malformed section at line " +
                                  std::to_string(lineno));
            section = trim(body.substr(1, body.size() - 2));
            if (section != "model" && section != "regions" && section != "noise" &&
                section != "run" && section != "output")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " +
                              std::to_string(lineno));
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (section == "model") apply_model(cfg.model, key, value);
        else if (section == "regions") apply_regions(cfg.model.regions, key, value);
        else if (section == "noise") apply_noise(cfg.kernel, key, value);
        else if (section == "run") apply_run(cfg.run, key, value);
        else if (section == "output") apply_output(cfg.output, key, value);
        else
            throw ConfigError("config: key '" + key + "' outside any section");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    const ModelParams& m = cfg.model;
    const HigherOrder& h = m.higher_order;
    std::ostringstream out;
    out << "[model]\n"
        << "sigma = " << fmt(m.sigma) << "\nlambda1 = " << fmt(m.lambda1)
        << "\nlambda2 = " << fmt(m.lambda2) << "\na = " << fmt(m.a) << "\nA = "
        << fmt(m.A[0]) << " " << fmt(m.A[1]) << "\nB = " << fmt(m.B[0]) << " "
        << fmt(m.B[1]) << "\nb = " << fmt(m.b[0]) << " " << fmt(m.b[1])
        << "\nC = " << fmt(m.C[0][0]) << " " << fmt(m.C[0][1]) << " "
        << fmt(m.C[1][0]) << " " << fmt(m.C[1][1]) << "\nq0 = " << fmt(m.q0[0])
        << " " << fmt(m.q0[1]) << "\nt_star = " << fmt(m.t_star) << "\nh_z3 = "
        << fmt(h.h_z3) << "\nh_t2 = " << fmt(h.h_t2) << "\nh_x1sq = "
        << fmt(h.h_x1sq) << "\nh_x2sq = " << fmt(h.h_x2sq) << "\nH1_z2 = "
        << fmt(h.H1_z2) << "\nH2_z2 = " << fmt(h.H2_z2) << "\nH1_t2 = "
        << fmt(h.H1_t2) << "\nH2_t2 = " << fmt(h.H2_t2) << "\n";
    const RegionGeometry& g = m.regions;
    out << "[regions]\nL = " << fmt(g.L_box) << "\nQprime = " << fmt(g.Qprime_box)
        << "\nQ = " << fmt(g.Q_box) << "\nR = " << fmt(g.R_box) << "\nU = "
        << fmt(g.U_box) << "\nzeta = " << fmt(g.zeta) << "\n";
    out << "[noise]\nkind = "
        << (cfg.kernel.kind == KernelKind::Uniform ? "uniform" : "abscontinuous")
        << "\nt0 = " << fmt(cfg.kernel.t0) << "\nepsilon = "
        << fmt(cfg.kernel.epsilon) << "\n";
    if (!cfg.kernel.density.empty()) {
        out << "density =";
        for (const DensityKnot& k : cfg.kernel.density)
            out << " " << fmt(k.t) << " " << fmt(k.value);
        out << "\n";
    }
    const RunConfig& r = cfg.run;
    out << "[run]\nseed = " << r.seed << "\nx0 = " << fmt(r.x0);
    if (!r.regular_points.empty()) {
        out << "\nregular_points = ";
        for (std::size_t i = 0; i < r.regular_points.size(); ++i)
            out << (i ? ", " : "") << fmt(r.regular_points[i]);
    }
    out << "\ndisk_base = " << fmt(r.disk_base) << "\nhorizon = " << r.horizon
        << "\nn_sequences = " << r.n_sequences << "\nburn_in = " << r.burn_in
        << "\ngrid_n = " << r.grid_n << "\nsamples_per_cell = "
        << r.samples_per_cell << "\nresolution = " << r.resolution
        << "\nn_samples = " << r.n_samples << "\nn_quadrature = "
        << r.n_quadrature << "\ngrid_spacing = " << fmt(r.grid_spacing)
        << "\nmatch_threshold = " << fmt(r.match_threshold) << "\nc0 = "
        << fmt(r.c0) << "\nb0 = " << fmt(r.b0) << "\n";
    // [output] is deliberately omitted: where results land does not change
    // what was computed, so it must not perturb the provenance hash.
    return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace rdyn
