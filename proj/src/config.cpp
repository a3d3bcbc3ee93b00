#include "fracvisc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fracvisc/errors.hpp"

namespace fracvisc {

namespace {

std::string fmt_double(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& s)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v))
            throw ConfigError("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
    }
}

long long parse_int(const std::string& key, const std::string& s)
{
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError("key '" + key + "' expects true/false, got '" + s + "'");
}

struct Accessor {
    std::string help;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Accessor number(T ExperimentConfig::*field, std::string help)
{
    return {std::move(help),
            [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_floating_point_v<T>)
                    c.*field = parse_double(k, v);
                else
                    c.*field = static_cast<T>(parse_int(k, v));
            },
            [field](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return fmt_double(c.*field);
                else
                    return std::to_string(c.*field);
            }};
}

template <typename T>
Accessor cg_number(T StopCriteria::*field, std::string help)
{
    return {std::move(help),
            [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if constexpr (std::is_floating_point_v<T>)
                    c.cg.*field = parse_double(k, v);
                else
                    c.cg.*field = static_cast<T>(parse_int(k, v));
            },
            [field](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return fmt_double(c.cg.*field);
                else
                    return std::to_string(c.cg.*field);
            }};
}

Accessor bound(double Interval::*end, Interval ExperimentConfig::*range, std::string help)
{
    return {std::move(help),
            [=](ExperimentConfig& c, const std::string& k, const std::string& v) { (c.*range).*end = parse_double(k, v); },
            [=](const ExperimentConfig& c) { return fmt_double((c.*range).*end); }};
}

Accessor text(std::string ExperimentConfig::*field, std::string help)
{
    return {std::move(help),
            [field](ExperimentConfig& c, const std::string&, const std::string& v) { c.*field = v; },
            [field](const ExperimentConfig& c) { return c.*field; }};
}

// Ordered by section so to_ini groups keys.
const std::vector<std::pair<std::string, Accessor>>& accessors()
{
    static const std::vector<std::pair<std::string, Accessor>> table = {
        {"domain.x_min", bound(&Interval::lo, &ExperimentConfig::x_range, "left edge of the rectangle")},
        {"domain.x_max", bound(&Interval::hi, &ExperimentConfig::x_range, "right edge of the rectangle")},
        {"domain.y_min", bound(&Interval::lo, &ExperimentConfig::y_range, "bottom edge of the rectangle")},
        {"domain.y_max", bound(&Interval::hi, &ExperimentConfig::y_range, "top edge of the rectangle")},
        {"domain.nx", number(&ExperimentConfig::nx, "cells along x")},
        {"domain.ny", number(&ExperimentConfig::ny, "cells along y")},
        {"time.final_time", number(&ExperimentConfig::final_time, "final time T")},
        {"time.steps", number(&ExperimentConfig::steps, "number of time steps N")},
        {"model.alpha", number(&ExperimentConfig::alpha, "fractional order in (1,2)")},
        {"model.eta", number(&ExperimentConfig::eta, "inertia coefficient (constant, > 0)")},
        {"model.mu", number(&ExperimentConfig::mu, "memory coefficient (constant, > 0)")},
        {"model.a11", number(&ExperimentConfig::a11, "diffusion tensor entry")},
        {"model.a12", number(&ExperimentConfig::a12, "diffusion tensor entry (symmetric)")},
        {"model.a22", number(&ExperimentConfig::a22, "diffusion tensor entry")},
        {"model.b1", number(&ExperimentConfig::b1, "convection x")},
        {"model.b2", number(&ExperimentConfig::b2, "convection y")},
        {"model.c", number(&ExperimentConfig::c, "reaction coefficient")},
        {"model.sigma", number(&ExperimentConfig::sigma, "Robin coefficient (>= 0)")},
        {"source.p_signal", text(&ExperimentConfig::p_signal, "baseline | constant:<v> | poly:c0,c1,...")},
        {"source.q_true", text(&ExperimentConfig::q_true, "baseline | q1 | q2 | q3 | zero | constant:<v>")},
        {"observation.margin", number(&ExperimentConfig::obs_margin, "frame width a, observed region is the complement of [a,1-a]^2")},
        {"noise.delta", number(&ExperimentConfig::noise_delta, "noise level (fraction, 0.01 = 1%)")},
        {"noise.scaling",
         {"absolute | relative (scale by max |u| on the observed region)",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "absolute")
                  c.noise_scaling = NoiseScaling::Absolute;
              else if (v == "relative")
                  c.noise_scaling = NoiseScaling::Relative;
              else
                  throw ConfigError("key '" + k + "' expects absolute|relative, got '" + v + "'");
          },
          [](const ExperimentConfig& c) {
              return std::string(c.noise_scaling == NoiseScaling::Absolute ? "absolute" : "relative");
          }}},
        {"noise.seed", number(&ExperimentConfig::seed, "RNG seed")},
        {"inversion.reg_weight", number(&ExperimentConfig::reg_weight, "Tikhonov weight")},
        {"inversion.q0", number(&ExperimentConfig::q0, "constant initial guess")},
        {"inversion.grad_tol", cg_number(&StopCriteria::grad_tol, "stop when ||J'||_L2 < grad_tol")},
        {"inversion.max_iter", cg_number(&StopCriteria::max_iter, "iteration cap")},
        {"inversion.armijo_c1", cg_number(&StopCriteria::armijo_c1, "sufficient decrease constant")},
        {"inversion.backtrack_factor", cg_number(&StopCriteria::backtrack_factor, "step shrink factor")},
        {"inversion.initial_step", cg_number(&StopCriteria::initial_step, "first trial step")},
        {"inversion.quadratic_step",
         {"start each line search at the exact minimizer along the direction",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.cg.quadratic_step = parse_bool(k, v); },
          [](const ExperimentConfig& c) { return std::string(c.cg.quadratic_step ? "true" : "false"); }}},
        {"inversion.max_backtracks", cg_number(&StopCriteria::max_backtracks, "backtracks before failure")},
        {"data.mesh_refine", number(&ExperimentConfig::data_mesh_refine, "generate data on an r-times finer space-time grid")},
        {"gradcheck.directions", number(&ExperimentConfig::gradcheck_directions, "random directions to test")},
        {"gradcheck.epsilon", number(&ExperimentConfig::gradcheck_epsilon, "central difference step")},
        {"output.directory", text(&ExperimentConfig::output_dir, "output directory")},
        {"output.vtk",
         {"also write legacy VTK files",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.vtk = parse_bool(k, v); },
          [](const ExperimentConfig& c) { return std::string(c.vtk ? "true" : "false"); }}},
    };
    return table;
}

const Accessor& find(const std::string& key)
{
    for (const auto& [name, acc] : accessors())
        if (name == key)
            return acc;
    throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const
{
    if (!(x_range.hi > x_range.lo) || !(y_range.hi > y_range.lo))
        throw ConfigError("domain bounds are degenerate");
    if (nx < 1 || ny < 1)
        throw ConfigError("domain.nx and domain.ny must be >= 1");
    if (!(final_time > 0.0) || steps < 2)
        throw ConfigError("time.final_time must be > 0 and time.steps >= 2");
    if (!(alpha > 1.0 && alpha < 2.0))
        throw ConfigError("model.alpha must lie in (1,2)");
    if (!(eta > 0.0) || !(mu > 0.0))
        throw ConfigError("model.eta and model.mu must be strictly positive");
    if (!(a11 > 0.0) || !(a11 * a22 - a12 * a12 > 0.0))
        throw ConfigError("diffusion tensor must be positive definite");
    if (sigma < 0.0)
        throw ConfigError("model.sigma must be non-negative");
    const double half = 0.5 * std::min(x_range.hi - x_range.lo, y_range.hi - y_range.lo);
    if (!(obs_margin > 0.0 && obs_margin < half))
        throw ConfigError("observation.margin must lie in (0, half the domain width)");
    if (!(noise_delta >= 0.0))
        throw ConfigError("noise.delta must be non-negative");
    if (!(reg_weight >= 0.0))
        throw ConfigError("inversion.reg_weight must be non-negative");
    if (data_mesh_refine < 1)
        throw ConfigError("data.mesh_refine must be >= 1");
    if (gradcheck_directions < 1 || !(gradcheck_epsilon > 0.0))
        throw ConfigError("gradcheck settings must be positive");
    try {
        cg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("inversion: ") + e.what());
    }
}

const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& [name, acc] : accessors())
            out.push_back({name, acc.help});
        return out;
    }();
    return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    find(key).set(cfg, key, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key)
{
    return find(key).get(cfg);
}

ExperimentConfig parse_config(const std::string& ini_text)
{
    boost::property_tree::ptree tree;
    std::istringstream in(ini_text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed INI: ") + e.what());
    }

    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + section + "' appears outside any section");
        for (const auto& [key, leaf] : body)
            set_config_value(cfg, section + "." + key, leaf.get_value<std::string>());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open configuration file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_ini(const ExperimentConfig& cfg)
{
    std::ostringstream out;
    std::string current;
    for (const auto& [name, acc] : accessors()) {
        const auto dot = name.find('.');
        const std::string section = name.substr(0, dot);
        if (section != current) {
            if (!current.empty())
                out << '\n';
            out << '[' << section << "]\n";
            current = section;
        }
        out << name.substr(dot + 1) << " = " << acc.get(cfg) << '\n';
    }
    return out.str();
}

}  // namespace fracvisc
