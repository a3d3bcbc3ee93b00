#pragma once

// Experiment layer: presets, synthetic data, noise, metrics and the
// reconstruction tables.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracvisc/config.hpp"
#include "fracvisc/inversion.hpp"

namespace fracvisc {

using TimeSignal = std::function<double(double)>;

/// baseline: 2 + (2πt)^2; constant:<v>; poly:c0,c1,...
TimeSignal time_signal_preset(const std::string& name);

/// baseline: ½ sin(πx)cos(πy) + 1
/// q1: 3 - exp(1 - (x+y)/2)
/// q2: ½ cos(πx)cos(2πy) + 1
/// q3: ½ cos(πx)cos(πy) + 1
/// zero; constant:<v>
ScalarField source_preset(const std::string& name);

std::shared_ptr<const Mesh> make_mesh(const ExperimentConfig& cfg);

/// Problem on `mesh` with zero initial data and q = q_true interpolated.
ProblemSpec make_problem(const ExperimentConfig& cfg, std::shared_ptr<const Mesh> mesh);

struct SyntheticData {
    std::shared_ptr<const Mesh> mesh;
    TimeGrid grid;
    Vec q_true;
    SpaceTimeField clean;
};

/// Forward solve with q_true. With data.mesh_refine = r > 1 the solve runs on
/// an r-times finer space-time grid and is restricted to the coarse nodes.
SyntheticData generate_data(const ExperimentConfig& cfg);

/// Nodes that belong to at least one observed element.
std::vector<char> observed_nodes(const Mesh& mesh, const ObservationMask& mask);

/// u + δ·s·U[-1,1] i.i.d. per (time, node); s = 1 (absolute) or the max of |u|
/// over observed nodes and all times (relative).
SpaceTimeField add_noise(const SpaceTimeField& u, const Mesh& mesh, const ObservationMask& mask,
                         double delta, std::uint64_t seed, NoiseScaling scaling = NoiseScaling::Relative);

double relative_l2_error(const Vec& q_true, const Vec& q_rec, const SpMat& mass);

struct Metrics {
    double rel_error = 0.0;
    double final_cost = 0.0;
    double final_grad_norm = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    StopReason stop_reason = StopReason::MaxIterations;
};

struct ExperimentResult {
    Metrics metrics;
    std::shared_ptr<const Mesh> mesh;
    Vec q_true;
    Vec q_rec;
    CgState state;
    SpMat mass;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes iterations.csv, metrics.csv, reconstruction.csv, manifest.json and
/// optionally reconstruction.vtk into `dir`.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                              const std::string& dir, bool vtk);

/// Adds truth.csv, abs_error.csv and loss.csv on top of write_experiment_outputs.
void write_figure3_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                           const std::string& dir, bool vtk);

/// Forward solve with q_true, exporting field.csv (and per-step VTK files).
SyntheticData run_forward(const ExperimentConfig& cfg, const std::string& dir, bool vtk);

struct TableRow {
    std::string label;
    ExperimentConfig config;  // row configuration (seed overwritten per run)
    std::vector<Metrics> runs;
    std::vector<std::string> failures;
    double median_rel_error = 0.0;
    double median_final_cost = 0.0;
    double min_rel_error = 0.0;
    double max_rel_error = 0.0;
};

struct TableResult {
    int table_id = 0;
    std::vector<TableRow> rows;
};

/// Row configurations of table 1 (noise level and frame width), table 2
/// (fractional order) or table 3 (source shape) derived from `base`.
std::vector<std::pair<std::string, ExperimentConfig>> table_rows(int table_id, const ExperimentConfig& base);

double median(std::vector<double> values);

/// Runs every row for every seed. A failing run marks its row but does not
/// abort the table. Rows and seeds run on a small thread pool.
TableResult run_table(int table_id, const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds);

void write_table_csv(const TableResult& table, const std::string& path);

struct GradCheckEntry {
    double adjoint = 0.0;      // <J'(q), q̃>_L2
    double finite_diff = 0.0;  // (J(q+εq̃) - J(q-εq̃)) / 2ε
    double rel_diff = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_diff = 0.0;
};

/// Random q and directions q̃ (seeded) against noisy data from q_true.
GradCheckReport run_gradcheck(const ExperimentConfig& cfg);

void write_gradcheck_csv(const GradCheckReport& report, const std::string& path);

std::string library_version();

}  // namespace fracvisc
