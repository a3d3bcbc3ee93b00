#include "fracvisc/fracvisc.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include "fracvisc/errors.hpp"
#include "fracvisc/harness.hpp"
#include "fracvisc/io.hpp"

struct fv_config {
    fracvisc::ExperimentConfig cfg;
};

struct fv_run {
    fracvisc::ExperimentResult result;
};

namespace {

thread_local std::string last_error;

template <typename F>
fv_status guarded(F&& body)
{
    try {
        last_error.clear();
        body();
        return FV_OK;
    } catch (const fracvisc::ConfigError& e) {
        last_error = e.what();
        return FV_ERR_CONFIG;
    } catch (const fracvisc::InvalidArgument& e) {
        last_error = e.what();
        return FV_ERR_INVALID_ARGUMENT;
    } catch (const fracvisc::NumericFailure& e) {
        last_error = e.what();
        return FV_ERR_NUMERIC;
    } catch (const fracvisc::LineSearchFailure& e) {
        last_error = e.what();
        return FV_ERR_LINE_SEARCH;
    } catch (const fracvisc::IoError& e) {
        last_error = e.what();
        return FV_ERR_IO;
    } catch (const std::exception& e) {
        last_error = e.what();
        return FV_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return FV_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what)
{
    if (p == nullptr)
        throw fracvisc::InvalidArgument(std::string(what) + " must not be NULL");
}

fv_stop_reason to_c(fracvisc::StopReason r)
{
    switch (r) {
    case fracvisc::StopReason::GradientTolerance:
        return FV_STOP_GRADIENT_TOLERANCE;
    case fracvisc::StopReason::MaxIterations:
        return FV_STOP_MAX_ITERATIONS;
    case fracvisc::StopReason::LineSearchFailure:
        return FV_STOP_LINE_SEARCH_FAILURE;
    }
    return FV_STOP_MAX_ITERATIONS;
}

}  // namespace

extern "C" {

const char* fv_version(void)
{
    static const std::string v = fracvisc::library_version();
    return v.c_str();
}

const char* fv_status_name(fv_status status)
{
    switch (status) {
    case FV_OK:
        return "ok";
    case FV_ERR_INVALID_ARGUMENT:
        return "invalid_argument";
    case FV_ERR_NUMERIC:
        return "numeric_failure";
    case FV_ERR_LINE_SEARCH:
        return "line_search_failure";
    case FV_ERR_CONFIG:
        return "config_error";
    case FV_ERR_IO:
        return "io_error";
    case FV_ERR_INTERNAL:
        return "internal_error";
    }
    return "unknown";
}

const char* fv_last_error(void)
{
    return last_error.c_str();
}

fv_status fv_config_default(fv_config** out)
{
    return guarded([&] {
        require(out, "out");
        *out = new fv_config{};
    });
}

fv_status fv_config_load(const char* path, fv_config** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new fv_config{fracvisc::load_config(path)};
    });
}

fv_status fv_config_parse(const char* ini_text, fv_config** out)
{
    return guarded([&] {
        require(ini_text, "ini_text");
        require(out, "out");
        *out = new fv_config{fracvisc::parse_config(ini_text)};
    });
}

fv_status fv_config_set(fv_config* cfg, const char* key, const char* value)
{
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(value, "value");
        fracvisc::set_config_value(cfg->cfg, key, value);
    });
}

fv_status fv_config_get(const fv_config* cfg, const char* key, char* buf, size_t len, size_t* needed)
{
    return guarded([&] {
        require(cfg, "cfg");
        require(key, "key");
        const std::string v = fracvisc::get_config_value(cfg->cfg, key);
        if (needed)
            *needed = v.size() + 1;
        if (buf && len > 0) {
            const std::size_t n = std::min(len - 1, v.size());
            std::memcpy(buf, v.data(), n);
            buf[n] = '\0';
        }
    });
}

fv_status fv_config_validate(const fv_config* cfg)
{
    return guarded([&] {
        require(cfg, "cfg");
        cfg->cfg.validate();
    });
}

void fv_config_free(fv_config* cfg)
{
    delete cfg;
}

fv_status fv_forward(const fv_config* cfg, const char* out_dir, int write_vtk, double* max_abs_u)
{
    return guarded([&] {
        require(cfg, "cfg");
        const auto data = out_dir ? fracvisc::run_forward(cfg->cfg, out_dir, write_vtk != 0)
                                  : fracvisc::generate_data(cfg->cfg);
        if (max_abs_u)
            *max_abs_u = data.clean.data().cwiseAbs().maxCoeff();
    });
}

fv_status fv_invert(const fv_config* cfg, const char* out_dir, int write_vtk, fv_run** out)
{
    return guarded([&] {
        require(cfg, "cfg");
        auto run = std::make_unique<fv_run>(fv_run{fracvisc::run_experiment(cfg->cfg)});
        if (out_dir)
            fracvisc::write_experiment_outputs(run->result, cfg->cfg, out_dir, write_vtk != 0);
        if (out)
            *out = run.release();
    });
}

fv_status fv_figure3(const fv_config* cfg, const char* out_dir, int write_vtk, fv_run** out)
{
    return guarded([&] {
        require(cfg, "cfg");
        auto run = std::make_unique<fv_run>(fv_run{fracvisc::run_experiment(cfg->cfg)});
        if (out_dir)
            fracvisc::write_figure3_outputs(run->result, cfg->cfg, out_dir, write_vtk != 0);
        if (out)
            *out = run.release();
    });
}

fv_status fv_table(const fv_config* cfg, int table_id, const uint64_t* seeds, size_t n_seeds,
                   const char* out_dir, size_t* failed_rows)
{
    return guarded([&] {
        require(cfg, "cfg");
        require(seeds, "seeds");
        const std::vector<std::uint64_t> s(seeds, seeds + n_seeds);
        const auto table = fracvisc::run_table(table_id, cfg->cfg, s);
        if (out_dir) {
            fracvisc::ensure_directory(out_dir);
            fracvisc::write_table_csv(table, fracvisc::join_path(out_dir, "table" + std::to_string(table_id) + ".csv"));
        }
        if (failed_rows)
            *failed_rows = static_cast<size_t>(std::count_if(table.rows.begin(), table.rows.end(),
                                                             [](const auto& r) { return !r.failures.empty(); }));
    });
}

fv_status fv_gradcheck(const fv_config* cfg, const char* out_dir, double* max_rel_diff)
{
    return guarded([&] {
        require(cfg, "cfg");
        const auto report = fracvisc::run_gradcheck(cfg->cfg);
        if (out_dir) {
            fracvisc::ensure_directory(out_dir);
            fracvisc::write_gradcheck_csv(report, fracvisc::join_path(out_dir, "gradcheck.csv"));
        }
        if (max_rel_diff)
            *max_rel_diff = report.max_rel_diff;
    });
}

fv_status fv_run_metrics(const fv_run* run, fv_metrics* out)
{
    return guarded([&] {
        require(run, "run");
        require(out, "out");
        const auto& m = run->result.metrics;
        *out = fv_metrics{m.rel_error, m.final_cost, m.final_grad_norm, m.iterations, m.seed, to_c(m.stop_reason)};
    });
}

size_t fv_run_history_length(const fv_run* run)
{
    return run ? run->result.state.cost_history.size() : 0;
}

fv_status fv_run_cost_history(const fv_run* run, double* out, size_t len)
{
    return guarded([&] {
        require(run, "run");
        require(out, "out");
        const auto& h = run->result.state.cost_history;
        if (len < h.size())
            throw fracvisc::InvalidArgument("buffer too small for the cost history");
        std::copy(h.begin(), h.end(), out);
    });
}

size_t fv_run_ndof(const fv_run* run)
{
    return run ? static_cast<size_t>(run->result.q_rec.size()) : 0;
}

fv_status fv_run_reconstruction(const fv_run* run, double* out, size_t len)
{
    return guarded([&] {
        require(run, "run");
        require(out, "out");
        const auto& q = run->result.q_rec;
        if (len < static_cast<size_t>(q.size()))
            throw fracvisc::InvalidArgument("buffer too small for the reconstruction");
        std::copy(q.data(), q.data() + q.size(), out);
    });
}

void fv_run_free(fv_run* run)
{
    delete run;
}

fv_status fv_gl_weights(double alpha, int n, double* out)
{
    return guarded([&] {
        require(out, "out");
        const auto w = fracvisc::gl_weights(fracvisc::FracOrder(alpha), n);
        std::copy(w.w().begin(), w.w().end(), out);
    });
}

fv_status fv_rl_power(double beta_exp, double alpha, double t, double* out)
{
    return guarded([&] {
        require(out, "out");
        *out = fracvisc::rl_power_oracle(beta_exp, fracvisc::FracOrder(alpha), t);
    });
}

}  // extern "C"
