#include "fracvisc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fracvisc/errors.hpp"
#include "fracvisc/io.hpp"

namespace fracvisc {

namespace {

constexpr double pi = std::numbers::pi;

bool starts_with(const std::string& s, const std::string& prefix)
{
    return s.rfind(prefix, 0) == 0;
}

double parse_number(const std::string& what, const std::string& s)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size())
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("bad number '" + s + "' in " + what);
}

// Uniform on [-1, 1] from the top 53 bits, independent of the standard
// library's distribution implementation.
double symmetric_uniform(std::mt19937_64& gen)
{
    return 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

ExperimentConfig refined(const ExperimentConfig& cfg, int r)
{
    ExperimentConfig fine = cfg;
    fine.nx *= r;
    fine.ny *= r;
    fine.steps *= r;
    return fine;
}

}  // namespace

TimeSignal time_signal_preset(const std::string& name)
{
    if (name == "baseline")
        return [](double t) { return 2.0 + (2.0 * pi * t) * (2.0 * pi * t); };
    if (starts_with(name, "constant:")) {
        const double v = parse_number("source.p_signal", name.substr(9));
        return [v](double) { return v; };
    }
    if (starts_with(name, "poly:")) {
        std::vector<double> coeffs;
        std::stringstream ss(name.substr(5));
        std::string item;
        while (std::getline(ss, item, ','))
            coeffs.push_back(parse_number("source.p_signal", item));
        if (coeffs.empty())
            throw ConfigError("poly: signal needs at least one coefficient");
        return [coeffs](double t) {
            double s = 0.0;
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
                s = s * t + *it;
            return s;
        };
    }
    throw ConfigError("unknown time signal preset '" + name + "'");
}

ScalarField source_preset(const std::string& name)
{
    if (name == "baseline")
        return [](Point2 p) { return 0.5 * std::sin(pi * p.x) * std::cos(pi * p.y) + 1.0; };
    if (name == "q1")
        return [](Point2 p) { return 3.0 - std::exp(1.0 - 0.5 * (p.x + p.y)); };
    if (name == "q2")
        return [](Point2 p) { return 0.5 * std::cos(pi * p.x) * std::cos(2.0 * pi * p.y) + 1.0; };
    if (name == "q3")
        return [](Point2 p) { return 0.5 * std::cos(pi * p.x) * std::cos(pi * p.y) + 1.0; };
    if (name == "zero")
        return constant_field(0.0);
    if (starts_with(name, "constant:"))
        return constant_field(parse_number("source.q_true", name.substr(9)));
    throw ConfigError("unknown source preset '" + name + "'");
}

std::shared_ptr<const Mesh> make_mesh(const ExperimentConfig& cfg)
{
    return std::make_shared<const Mesh>(triangulate_rectangle(cfg.x_range, cfg.y_range, cfg.nx, cfg.ny));
}

ProblemSpec make_problem(const ExperimentConfig& cfg, std::shared_ptr<const Mesh> mesh)
{
    cfg.validate();
    ProblemSpec spec;
    spec.eta = constant_field(cfg.eta);
    spec.mu = constant_field(cfg.mu);
    spec.elliptic.A = constant_matrix(cfg.a11, cfg.a12, cfg.a22);
    spec.elliptic.b = constant_vector(cfg.b1, cfg.b2);
    spec.elliptic.c = constant_field(cfg.c);
    spec.elliptic.sigma = constant_field(cfg.sigma);
    spec.alpha = FracOrder(cfg.alpha);
    spec.grid = build_time_grid(cfg.final_time, cfg.steps);
    const auto signal = time_signal_preset(cfg.p_signal);
    spec.p.resize(spec.grid.nodes.size());
    std::transform(spec.grid.nodes.begin(), spec.grid.nodes.end(), spec.p.begin(), signal);
    spec.q = interpolate(*mesh, source_preset(cfg.q_true));
    spec.u0 = Vec::Zero(mesh->num_nodes());
    spec.u1 = Vec::Zero(mesh->num_nodes());
    spec.mesh = std::move(mesh);
    return spec;
}

SyntheticData generate_data(const ExperimentConfig& cfg)
{
    cfg.validate();
    SyntheticData out;
    out.mesh = make_mesh(cfg);
    const ProblemSpec coarse = make_problem(cfg, out.mesh);
    out.grid = coarse.grid;
    out.q_true = coarse.q;

    const int r = cfg.data_mesh_refine;
    if (r == 1) {
        out.clean = solve_forward(coarse);
        return out;
    }

    const ExperimentConfig fine_cfg = refined(cfg, r);
    const auto fine_mesh = make_mesh(fine_cfg);
    const SpaceTimeField fine = solve_forward(make_problem(fine_cfg, fine_mesh));
    out.clean = SpaceTimeField(cfg.steps + 1, out.mesh->num_nodes());
    for (int n = 0; n <= cfg.steps; ++n)
        for (int j = 0; j <= cfg.ny; ++j)
            for (int i = 0; i <= cfg.nx; ++i)
                out.clean(n, out.mesh->node_index(i, j)) = fine(n * r, fine_mesh->node_index(i * r, j * r));
    return out;
}

std::vector<char> observed_nodes(const Mesh& mesh, const ObservationMask& mask)
{
    std::vector<char> nodes(mesh.num_nodes(), 0);
    for (int e = 0; e < mesh.num_triangles(); ++e)
        if (mask.contains(e))
            for (int v : mesh.triangles[e])
                nodes[v] = 1;
    return nodes;
}

SpaceTimeField add_noise(const SpaceTimeField& u, const Mesh& mesh, const ObservationMask& mask,
                         double delta, std::uint64_t seed, NoiseScaling scaling)
{
    if (!(delta >= 0.0))
        throw InvalidArgument("noise level must be non-negative");
    if (u.ndof() != mesh.num_nodes())
        throw InvalidArgument("field does not match the mesh");

    double scale = 1.0;
    if (scaling == NoiseScaling::Relative) {
        const auto observed = observed_nodes(mesh, mask);
        scale = 0.0;
        for (int n = 0; n < u.steps(); ++n)
            for (int i = 0; i < u.ndof(); ++i)
                if (observed[i])
                    scale = std::max(scale, std::abs(u(n, i)));
    }

    SpaceTimeField noisy = u;
    if (delta == 0.0)
        return noisy;
    std::mt19937_64 gen(seed);
    const double amp = delta * scale;
    for (int n = 0; n < u.steps(); ++n)
        for (int i = 0; i < u.ndof(); ++i)
            noisy(n, i) += amp * symmetric_uniform(gen);
    return noisy;
}

double relative_l2_error(const Vec& q_true, const Vec& q_rec, const SpMat& mass)
{
    if (q_true.size() != q_rec.size() || q_true.size() != mass.rows())
        throw InvalidArgument("vectors do not share a dof layout");
    const double denom = mass_norm(mass, q_true);
    if (!(denom > 0.0))
        throw InvalidArgument("true source has zero L2 norm");
    return mass_norm(mass, q_true - q_rec) / denom;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const SyntheticData data = generate_data(cfg);
    ObservationMask mask = frame_mask(*data.mesh, cfg.obs_margin);
    SpaceTimeField noisy = add_noise(data.clean, *data.mesh, mask, cfg.noise_delta, cfg.seed, cfg.noise_scaling);

    InverseSetup setup = make_inverse_setup(make_problem(cfg, data.mesh), std::move(mask), std::move(noisy),
                                            cfg.reg_weight);
    const Vec q0 = Vec::Constant(data.mesh->num_nodes(), cfg.q0);
    Reconstruction rec = reconstruct(setup, q0, cfg.cg);

    ExperimentResult out;
    out.mesh = data.mesh;
    out.q_true = data.q_true;
    out.q_rec = rec.q;
    out.mass = setup.full_mass;
    out.metrics.rel_error = relative_l2_error(out.q_true, out.q_rec, out.mass);
    out.metrics.final_cost = rec.state.cost_history.back();
    out.metrics.final_grad_norm = rec.state.grad_norm_history.back();
    out.metrics.iterations = rec.state.k;
    out.metrics.seed = cfg.seed;
    out.metrics.stop_reason = rec.state.reason;
    out.state = std::move(rec.state);
    return out;
}

namespace {

void write_metrics_csv(const std::string& path, const Metrics& m)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "rel_error,final_cost,final_grad_norm,iterations,seed,stop_reason\n";
    out << m.rel_error << ',' << m.final_cost << ',' << m.final_grad_norm << ',' << m.iterations << ','
        << m.seed << ',' << to_string(m.stop_reason) << '\n';
    write_text(path, out.str());
}

void write_iterations_csv(const std::string& path, const CgState& st)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "k,cost,grad_norm,step,wall_time_ms\n";
    for (std::size_t k = 0; k < st.cost_history.size(); ++k)
        out << k << ',' << st.cost_history[k] << ',' << st.grad_norm_history[k] << ',' << st.step_history[k]
            << ',' << std::setprecision(6) << st.wall_time_ms[k] << std::setprecision(17) << '\n';
    write_text(path, out.str());
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg, const Metrics& m)
{
    nlohmann::ordered_json j;
    j["library"] = "fracvisc";
    j["version"] = library_version();
    j["seed"] = cfg.seed;
    j["noise_scaling"] = get_config_value(cfg, "noise.scaling");
    j["config"] = to_ini(cfg);
    j["stop_reason"] = to_string(m.stop_reason);
    j["iterations"] = m.iterations;
    write_text(path, j.dump(2) + "\n");
}

}  // namespace

void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                              const std::string& dir, bool vtk)
{
    ensure_directory(dir);
    write_iterations_csv(join_path(dir, "iterations.csv"), result.state);
    write_metrics_csv(join_path(dir, "metrics.csv"), result.metrics);
    write_nodal_csv(join_path(dir, "reconstruction.csv"), *result.mesh, result.q_rec, "q_value");
    write_manifest(join_path(dir, "manifest.json"), cfg, result.metrics);
    if (vtk)
        write_vtk(join_path(dir, "reconstruction.vtk"), *result.mesh,
                  {{"q_rec", result.q_rec}, {"q_true", result.q_true}});
}

void write_figure3_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                           const std::string& dir, bool vtk)
{
    write_experiment_outputs(result, cfg, dir, false);
    const Vec abs_err = (result.q_rec - result.q_true).cwiseAbs();
    write_nodal_csv(join_path(dir, "truth.csv"), *result.mesh, result.q_true, "q_value");
    write_nodal_csv(join_path(dir, "abs_error.csv"), *result.mesh, abs_err, "abs_error");
    std::ostringstream loss;
    loss << std::setprecision(17) << "k,cost\n";
    for (std::size_t k = 0; k < result.state.cost_history.size(); ++k)
        loss << k << ',' << result.state.cost_history[k] << '\n';
    write_text(join_path(dir, "loss.csv"), loss.str());
    if (vtk)
        write_vtk(join_path(dir, "figure3.vtk"), *result.mesh,
                  {{"q_rec", result.q_rec}, {"q_true", result.q_true}, {"abs_error", abs_err}});
}

SyntheticData run_forward(const ExperimentConfig& cfg, const std::string& dir, bool vtk)
{
    SyntheticData data = generate_data(cfg);
    ensure_directory(dir);
    write_field_csv(join_path(dir, "field.csv"), *data.mesh, data.grid, data.clean);
    write_nodal_csv(join_path(dir, "source.csv"), *data.mesh, data.q_true, "q_value");
    if (vtk) {
        for (int n = 0; n < data.clean.steps(); ++n) {
            std::ostringstream name;
            name << "field_" << std::setw(4) << std::setfill('0') << n << ".vtk";
            write_vtk(join_path(dir, name.str()), *data.mesh, {{"u", Vec(data.clean.step(n))}},
                      "fracvisc forward t=" + std::to_string(data.grid.nodes[n]));
        }
    }
    return data;
}

std::vector<std::pair<std::string, ExperimentConfig>> table_rows(int table_id, const ExperimentConfig& base)
{
    std::vector<std::pair<std::string, ExperimentConfig>> rows;
    auto row = [&](std::string label, auto&& edit) {
        ExperimentConfig c = base;
        edit(c);
        c.validate();
        rows.emplace_back(std::move(label), std::move(c));
    };
    switch (table_id) {
    case 1: {
        const std::pair<double, double> cases[] = {
            {0.01, 0.1}, {0.03, 0.1}, {0.05, 0.1}, {0.01, 0.2}, {0.01, 0.1}, {0.01, 0.05}};
        for (auto [delta, margin] : cases) {
            std::ostringstream label;
            label << "delta=" << delta << " margin=" << margin;
            row(label.str(), [&](ExperimentConfig& c) {
                c.alpha = 1.5;
                c.noise_delta = delta;
                c.obs_margin = margin;
            });
        }
        break;
    }
    case 2:
        for (double alpha : {1.3, 1.6, 1.9}) {
            std::ostringstream label;
            label << "alpha=" << alpha;
            row(label.str(), [&](ExperimentConfig& c) {
                c.alpha = alpha;
                c.noise_delta = 0.02;
                c.obs_margin = 0.05;
            });
        }
        break;
    case 3:
        for (const char* q : {"q1", "q2", "q3"}) {
            row(std::string("q_true=") + q, [&](ExperimentConfig& c) {
                c.q_true = q;
                c.noise_delta = 0.01;
                c.obs_margin = 0.05;
            });
        }
        break;
    default:
        throw InvalidArgument("table id must be 1, 2 or 3");
    }
    return rows;
}

double median(std::vector<double> values)
{
    if (values.empty())
        return std::nan("");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

TableResult run_table(int table_id, const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds)
{
    if (seeds.empty())
        throw InvalidArgument("a table needs at least one seed");
    TableResult table;
    table.table_id = table_id;
    for (auto& [label, cfg] : table_rows(table_id, base)) {
        TableRow r;
        r.label = label;
        r.config = cfg;
        r.runs.resize(seeds.size());
        table.rows.push_back(std::move(r));
    }

    const std::size_t jobs = table.rows.size() * seeds.size();
    std::vector<std::optional<std::string>> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            const std::size_t row = j / seeds.size();
            const std::size_t s = j % seeds.size();
            ExperimentConfig cfg = table.rows[row].config;
            cfg.seed = seeds[s];
            try {
                table.rows[row].runs[s] = run_experiment(cfg).metrics;
            } catch (const std::exception& e) {
                errors[j] = "seed " + std::to_string(seeds[s]) + ": " + e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                               static_cast<unsigned>(jobs)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        TableRow& r = table.rows[row];
        std::vector<Metrics> ok;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            if (errors[row * seeds.size() + s])
                r.failures.push_back(*errors[row * seeds.size() + s]);
            else
                ok.push_back(r.runs[s]);
        }
        r.runs = ok;
        std::vector<double> rel, cost;
        for (const auto& m : ok) {
            rel.push_back(m.rel_error);
            cost.push_back(m.final_cost);
        }
        r.median_rel_error = median(rel);
        r.median_final_cost = median(cost);
        r.min_rel_error = rel.empty() ? std::nan("") : *std::min_element(rel.begin(), rel.end());
        r.max_rel_error = rel.empty() ? std::nan("") : *std::max_element(rel.begin(), rel.end());
    }
    return table;
}

void write_table_csv(const TableResult& table, const std::string& path)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "row,noise_level_percent,observation_margin,alpha,q_true,rel_error_median,final_cost_median,"
           "rel_error_min,rel_error_max,n_seeds,n_failed\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        out << i + 1 << ',' << 100.0 * r.config.noise_delta << ',' << r.config.obs_margin << ','
            << r.config.alpha << ',' << r.config.q_true << ',' << r.median_rel_error << ','
            << r.median_final_cost << ',' << r.min_rel_error << ',' << r.max_rel_error << ','
            << r.runs.size() << ',' << r.failures.size() << '\n';
    }
    write_text(path, out.str());
}

GradCheckReport run_gradcheck(const ExperimentConfig& cfg)
{
    cfg.validate();
    const SyntheticData data = generate_data(cfg);
    ObservationMask mask = frame_mask(*data.mesh, cfg.obs_margin);
    SpaceTimeField noisy = add_noise(data.clean, *data.mesh, mask, cfg.noise_delta, cfg.seed, cfg.noise_scaling);
    const InverseSetup setup = make_inverse_setup(make_problem(cfg, data.mesh), std::move(mask),
                                                  std::move(noisy), cfg.reg_weight);

    std::mt19937_64 gen(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto ndof = data.mesh->num_nodes();
    Vec q(ndof);
    for (int i = 0; i < ndof; ++i)
        q[i] = data.q_true[i] + 0.5 * symmetric_uniform(gen);
    const CostEvaluation base = evaluate_cost(setup, q);
    const Vec grad = evaluate_gradient(setup, q, base.state);

    GradCheckReport report;
    const double eps = cfg.gradcheck_epsilon;
    for (int d = 0; d < cfg.gradcheck_directions; ++d) {
        Vec dir(ndof);
        for (int i = 0; i < ndof; ++i)
            dir[i] = symmetric_uniform(gen);
        GradCheckEntry e;
        e.adjoint = mass_inner(setup.full_mass, grad, dir);
        e.finite_diff = (evaluate_cost(setup, q + eps * dir).cost - evaluate_cost(setup, q - eps * dir).cost) /
                        (2.0 * eps);
        e.rel_diff = std::abs(e.adjoint - e.finite_diff) / std::max(std::abs(e.finite_diff), 1e-300);
        report.max_rel_diff = std::max(report.max_rel_diff, e.rel_diff);
        report.entries.push_back(e);
    }
    return report;
}

void write_gradcheck_csv(const GradCheckReport& report, const std::string& path)
{
    std::ostringstream out;
    out << std::setprecision(17) << "direction,adjoint,finite_difference,rel_diff\n";
    for (std::size_t i = 0; i < report.entries.size(); ++i)
        out << i << ',' << report.entries[i].adjoint << ',' << report.entries[i].finite_diff << ','
            << report.entries[i].rel_diff << '\n';
    write_text(path, out.str());
}

std::string library_version()
{
    return "0.1.0";
}

}  // namespace fracvisc
