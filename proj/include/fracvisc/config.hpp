#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracvisc/fem2d.hpp"
#include "fracvisc/inversion.hpp"

namespace fracvisc {

enum class NoiseScaling {
    Absolute,  // u + δ·U[-1,1]
    Relative,  // u + δ·||u||_{∞,Ω0×[0,T]}·U[-1,1]
};

/// Every knob of one experiment. Keys in the INI file are `section.key`;
/// see config_keys() for the full list.
struct ExperimentConfig {
    Interval x_range{0.0, 1.0};
    Interval y_range{0.0, 1.0};
    int nx = 20;
    int ny = 20;
    double final_time = 1.5;
    int steps = 20;

    double alpha = 1.5;
    double eta = 1.0;
    double mu = 1.0;
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double c = 0.0;
    double sigma = 0.0;

    std::string p_signal = "baseline";
    std::string q_true = "baseline";

    double obs_margin = 0.05;

    double noise_delta = 0.01;
    NoiseScaling noise_scaling = NoiseScaling::Relative;
    std::uint64_t seed = 1;

    double reg_weight = 1e-6;
    double q0 = 1.0;
    StopCriteria cg;

    int data_mesh_refine = 1;

    int gradcheck_directions = 3;
    double gradcheck_epsilon = 1e-4;

    std::string output_dir = "out";
    bool vtk = false;

    void validate() const;
};

struct ConfigKey {
    std::string name;  // "section.key"
    std::string help;
};

const std::vector<ConfigKey>& config_keys();

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::string& path);

/// Sets one `section.key`; throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

/// Canonical INI rendering, parseable by parse_config.
std::string to_ini(const ExperimentConfig& cfg);

}  // namespace fracvisc
