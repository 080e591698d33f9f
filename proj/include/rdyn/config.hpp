#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdyn/model.hpp"
#include "rdyn/noise.hpp"

namespace rdyn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed{1};
    Point x0{0.05, 1.0, 1.0};
    std::vector<Point> regular_points; // candidates for the ball verifier
    Point disk_base{1.0, 0.0, 0.0};
    std::size_t horizon{2000};
    std::size_t n_sequences{1000};
    std::size_t burn_in{100};
    std::size_t grid_n{48};
    std::size_t samples_per_cell{64};
    std::size_t resolution{64};
    std::size_t n_samples{1000};
    std::size_t n_quadrature{16};
    double grid_spacing{0.0015};
    double match_threshold{0.5};
    double c0{10.0};
    double b0{0.2};
    unsigned threads{1};
};

struct OutputConfig {
    std::string dir{"out"};
    bool csv{true};
    bool json{true};
};

struct ExperimentConfig {
    ModelParams model;
    NoiseKernel kernel;
    RunConfig run;
    OutputConfig output;
};

// Strict INI parser: sections [model], [regions], [noise], [run],
// [output]; unknown sections or keys throw ConfigError. Values left out
// keep the shipped defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialization of the fully resolved config (fixed key order,
// full precision); reruns with equal configs produce equal text. The
// worker count and the [output] section are excluded: they cannot change
// any computed value.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

} // namespace rdyn
