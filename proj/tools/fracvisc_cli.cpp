// Command-line front end. Talks to the solver only through the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracvisc/fracvisc.h"

namespace {

struct ConfigDeleter {
    void operator()(fv_config* c) const { fv_config_free(c); }
};
struct RunDeleter {
    void operator()(fv_run* r) const { fv_run_free(r); }
};
using ConfigPtr = std::unique_ptr<fv_config, ConfigDeleter>;
using RunPtr = std::unique_ptr<fv_run, RunDeleter>;

struct Failure {
    fv_status status;
};

void check(fv_status s)
{
    if (s != FV_OK)
        throw Failure{s};
}

struct Options {
    std::string config;
    std::string out;
    std::int64_t seed = -1;
    bool vtk = false;
    std::vector<std::string> overrides;
    std::string seeds;
};

ConfigPtr load(const Options& opt)
{
    fv_config* raw = nullptr;
    check(fv_config_load(opt.config.c_str(), &raw));
    ConfigPtr cfg(raw);
    for (const auto& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << R"({"status":"config_error","message":"--set expects key=value"})" << '\n';
            throw Failure{FV_ERR_CONFIG};
        }
        check(fv_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    if (opt.seed >= 0)
        check(fv_config_set(cfg.get(), "noise.seed", std::to_string(opt.seed).c_str()));
    check(fv_config_validate(cfg.get()));
    return cfg;
}

std::string out_dir(const Options& opt, const fv_config* cfg)
{
    if (!opt.out.empty())
        return opt.out;
    size_t needed = 0;
    check(fv_config_get(cfg, "output.directory", nullptr, 0, &needed));
    std::string buf(needed, '\0');
    check(fv_config_get(cfg, "output.directory", buf.data(), buf.size(), nullptr));
    buf.resize(needed - 1);
    return buf;
}

bool want_vtk(const Options& opt, const fv_config* cfg)
{
    if (opt.vtk)
        return true;
    char buf[8] = {};
    check(fv_config_get(cfg, "output.vtk", buf, sizeof buf, nullptr));
    return std::string(buf) == "true";
}

void print_metrics(const fv_run* run)
{
    fv_metrics m{};
    check(fv_run_metrics(run, &m));
    std::printf("rel_error=%.6e final_cost=%.6e grad_norm=%.6e iterations=%d seed=%llu stop=%d\n", m.rel_error,
                m.final_cost, m.final_grad_norm, m.iterations, static_cast<unsigned long long>(m.seed),
                static_cast<int>(m.stop_reason));
}

std::vector<std::uint64_t> parse_seeds(const std::string& list, const fv_config* cfg)
{
    std::vector<std::uint64_t> seeds;
    if (list.empty()) {
        char buf[32] = {};
        check(fv_config_get(cfg, "noise.seed", buf, sizeof buf, nullptr));
        seeds.push_back(std::stoull(buf));
        return seeds;
    }
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        seeds.push_back(std::stoull(item));
    return seeds;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Inverse source reconstruction for a fractional viscoelastic membrane"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fv_version()));

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", opt.config, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (default: output.directory)");
        sub->add_option("--seed", opt.seed, "noise seed override");
        sub->add_flag("--vtk", opt.vtk, "also write legacy VTK files");
        sub->add_option("--set", opt.overrides, "override a key, e.g. --set noise.delta=0.03");
    };

    auto* forward = app.add_subcommand("forward", "run the forward solve and export the field");
    auto* invert = app.add_subcommand("invert", "single reconstruction");
    auto* figure3 = app.add_subcommand("figure3", "baseline reconstruction with truth, error and loss exports");
    auto* gradcheck = app.add_subcommand("gradcheck", "adjoint gradient vs central finite differences");
    std::vector<CLI::App*> tables;
    for (int id = 1; id <= 3; ++id) {
        auto* t = app.add_subcommand("table" + std::to_string(id), "reproduce reconstruction table " + std::to_string(id));
        t->add_option("--seeds", opt.seeds, "comma-separated seed list");
        tables.push_back(t);
    }
    for (auto* sub : {forward, invert, figure3, gradcheck})
        add_common(sub);
    for (auto* t : tables)
        add_common(t);

    CLI11_PARSE(app, argc, argv);

    try {
        const ConfigPtr cfg = load(opt);
        const std::string dir = out_dir(opt, cfg.get());
        const int vtk = want_vtk(opt, cfg.get()) ? 1 : 0;

        if (forward->parsed()) {
            double umax = 0.0;
            check(fv_forward(cfg.get(), dir.c_str(), vtk, &umax));
            std::printf("max|u|=%.6e written to %s\n", umax, dir.c_str());
        } else if (invert->parsed() || figure3->parsed()) {
            fv_run* raw = nullptr;
            check(invert->parsed() ? fv_invert(cfg.get(), dir.c_str(), vtk, &raw)
                                   : fv_figure3(cfg.get(), dir.c_str(), vtk, &raw));
            const RunPtr run(raw);
            print_metrics(run.get());
        } else if (gradcheck->parsed()) {
            double worst = 0.0;
            check(fv_gradcheck(cfg.get(), dir.c_str(), &worst));
            std::printf("max_rel_diff=%.6e\n", worst);
        } else {
            for (int id = 1; id <= 3; ++id) {
                if (!tables[id - 1]->parsed())
                    continue;
                const auto seeds = parse_seeds(opt.seeds, cfg.get());
                size_t failed = 0;
                check(fv_table(cfg.get(), id, seeds.data(), seeds.size(), dir.c_str(), &failed));
                std::printf("table%d written to %s (%zu failed rows)\n", id, dir.c_str(), failed);
                if (failed > 0)
                    return FV_ERR_NUMERIC;
            }
        }
    } catch (const Failure& f) {
        nlohmann::json line{{"status", fv_status_name(f.status)}, {"message", fv_last_error()}};
        std::cerr << line.dump() << '\n';
        return static_cast<int>(f.status);
    } catch (const std::exception& e) {
        nlohmann::json line{{"status", "internal_error"}, {"message", e.what()}};
        std::cerr << line.dump() << '\n';
        return static_cast<int>(FV_ERR_INTERNAL);
    }
    return 0;
}
