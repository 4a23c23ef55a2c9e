// Command-line front end: drift goodness-of-fit test for small-noise
// diffusions, path simulation and Monte Carlo experiments.
//
// Exit status: 0 success (or test accepted), 1 usage error, 2 runtime or
// data error, 3 test rejected the null hypothesis.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smalldiff/error.hpp"
#include "smalldiff/expr.hpp"
#include "smalldiff/harness.hpp"
#include "smalldiff/io.hpp"
#include "smalldiff/limitdist.hpp"
#include "smalldiff/model.hpp"
#include "smalldiff/simulate.hpp"
#include "smalldiff/statistic.hpp"

namespace {

using nlohmann::ordered_json;
using namespace smalldiff;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitReject = 3;

struct ModelFlags {
    std::string drift;
    std::string sigma = "1";
    double x0 = 1.0;
    double T = 1.0;
};

struct ExperimentFlags {
    ModelFlags model;
    std::string null_drift;
    std::vector<double> eps;
    double gamma = 2.5;
    std::size_t substeps = 4;
    std::size_t reps = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string layout = "uniform";
    std::string csv_out;
};

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

// Human-readable summary lines for stderr.
template <typename... Args>
std::string printf_string(const char* format, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void emit(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

sim::GridLayout parse_layout(const std::string& s) {
    return s == "jittered" ? sim::GridLayout::Jittered : sim::GridLayout::Uniform;
}

void add_model_flags(CLI::App* cmd, ModelFlags& m, bool drift_required, const std::string& drift_help) {
    auto* drift = cmd->add_option("--drift", m.drift, drift_help);
    if (drift_required) {
        drift->required();
    }
    cmd->add_option("--sigma", m.sigma, "Diffusion coefficient sigma(x)")->capture_default_str();
    cmd->add_option("--x0", m.x0, "Initial value")->capture_default_str();
    cmd->add_option("--T", m.T, "Time horizon")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, std::size_t default_reps,
                          std::vector<double> default_eps) {
    f.reps = default_reps;
    f.eps = std::move(default_eps);
    cmd->add_option("--null-drift", f.null_drift, "Null drift S0(x)")->required();
    cmd->add_option("--eps", f.eps, "Noise levels, comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--gamma", f.gamma, "Mesh exponent: h = eps^gamma")->capture_default_str();
    cmd->add_option("--substeps", f.substeps, "Euler substeps per observation interval")->capture_default_str();
    cmd->add_option("--reps", f.reps, "Replications per eps")->capture_default_str();
    cmd->add_option("--alpha", f.alpha, "Test level")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Base seed")->capture_default_str();
    cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores); results do not depend on it");
    cmd->add_option("--layout", f.layout, "Grid layout")
        ->check(CLI::IsMember({"uniform", "jittered"}))
        ->capture_default_str();
    cmd->add_option("--csv", f.csv_out, "Also write the report table as CSV to this file");
}

harness::ExperimentConfig make_config(const ExperimentFlags& f, bool with_alt) {
    const auto null = expr::Expression::parse(f.null_drift);
    model::ModelSpec spec(null, expr::Expression::parse(f.model.sigma), f.model.x0, f.model.T,
                          f.eps.empty() ? 1.0 : f.eps.front());
    return harness::ExperimentConfig{
        .model = spec,
        .null_drift = null,
        .alt_drift = with_alt ? std::optional(expr::Expression::parse(f.model.drift)) : std::nullopt,
        .gamma = f.gamma,
        .substeps = f.substeps,
        .replications = f.reps,
        .alpha = f.alpha,
        .base_seed = f.seed,
        .eps_list = f.eps,
        .layout = parse_layout(f.layout),
        .threads = f.threads,
    };
}

void write_file(const std::string& path, const auto& writer) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    writer(out);
    if (!out) {
        throw Error("failed writing '" + path + "'");
    }
}

// Expands `--config file.json` into ordinary flags. Keys also given
// explicitly on the command line are skipped, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> rest;
    std::vector<std::string> injected;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            std::ifstream in(args[i + 1]);
            if (!in) {
                throw CLI::ValidationError("--config", "cannot read " + args[i + 1]);
            }
            const auto j = nlohmann::json::parse(in, nullptr, false);
            if (!j.is_object()) {
                throw CLI::ValidationError("--config", "expected a JSON object");
            }
            for (const auto& [key, value] : j.items()) {
                if (std::find(args.begin(), args.end(), "--" + key) != args.end()) {
                    continue;
                }
                injected.push_back("--" + key);
                if (value.is_array()) {
                    std::string joined;
                    for (const auto& v : value) {
                        joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
                    }
                    injected.push_back(joined);
                } else {
                    injected.push_back(value.is_string() ? value.get<std::string>() : value.dump());
                }
            }
            ++i;
        } else {
            rest.push_back(args[i]);
        }
    }
    if (injected.empty()) {
        return rest;
    }
    std::vector<std::string> out;
    if (!rest.empty()) {
        out.push_back(rest.front());
        out.insert(out.end(), injected.begin(), injected.end());
        out.insert(out.end(), rest.begin() + 1, rest.end());
    } else {
        out = injected;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smalldiff: drift goodness-of-fit test for small-noise diffusions"};
    app.require_subcommand(1);
    app.add_option("--config", "JSON object whose keys mirror command flags");

    // test
    std::string data_file;
    std::string curve_out;
    std::string null_drift;
    double eps = 0.0;
    double alpha = 0.05;
    auto* test = app.add_subcommand("test", "Test a drift hypothesis on an observed path (CSV t,x)");
    test->add_option("--data", data_file, "CSV file with header t,x")->required();
    test->add_option("--eps", eps, "Noise level of the data")->required();
    test->add_option("--null-drift", null_drift, "Null drift S0(x)")->required();
    test->add_option("--alpha", alpha, "Test level")->capture_default_str();
    test->add_option("--curve-out", curve_out, "Write the U curve as CSV u,value");

    // simulate
    ModelFlags sim_model;
    double sim_eps = 0.0;
    double gamma = 2.5;
    std::size_t substeps = 4;
    std::uint64_t seed = 0;
    std::string layout = "uniform";
    std::string out_file;
    auto* simulate = app.add_subcommand("simulate", "Simulate a discretely observed path");
    add_model_flags(simulate, sim_model, true, "Drift S(x)");
    simulate->add_option("--eps", sim_eps, "Noise level")->required();
    simulate->add_option("--gamma", gamma, "Mesh exponent: h = eps^gamma")->capture_default_str();
    simulate->add_option("--substeps", substeps, "Euler substeps per observation interval")->capture_default_str();
    simulate->add_option("--seed", seed, "Seed")->capture_default_str();
    simulate->add_option("--layout", layout, "Grid layout")
        ->check(CLI::IsMember({"uniform", "jittered"}))
        ->capture_default_str();
    simulate->add_option("--out", out_file, "Output CSV (metadata goes to <out>.json); stdout if omitted");

    // quantile / pvalue
    double p = 0.0;
    double d = 0.0;
    auto* quantile = app.add_subcommand("quantile", "Quantile of sup_{[0,1]}|B|");
    quantile->add_option("--p", p, "Probability in (0,1)")->required();
    auto* pvalue = app.add_subcommand("pvalue", "P-value of a normalized statistic");
    pvalue->add_option("--d", d, "Statistic value (>= 0)")->required();

    // size / power / sweep
    ExperimentFlags size_flags;
    auto* size = app.add_subcommand("size", "Monte Carlo rejection rate under the null");
    add_model_flags(size, size_flags.model, false, "Ignored; simulation uses --null-drift");
    add_experiment_flags(size, size_flags, 2000, {0.05});

    ExperimentFlags power_flags;
    auto* power = app.add_subcommand("power", "Monte Carlo rejection rate under an alternative");
    add_model_flags(power, power_flags.model, true, "Alternative drift S(x) used for simulation");
    add_experiment_flags(power, power_flags, 1000, {0.1, 0.05});

    ExperimentFlags sweep_flags;
    sweep_flags.substeps = 8;
    auto* sweep = app.add_subcommand("sweep", "Convergence diagnostics across decreasing eps");
    add_model_flags(sweep, sweep_flags.model, false, "Ignored; simulation uses --null-drift");
    add_experiment_flags(sweep, sweep_flags, 200, {0.2, 0.1, 0.05});

    // validate
    ModelFlags val_model;
    double val_eps = 0.1;
    std::optional<double> lo;
    std::optional<double> hi;
    auto* validate = app.add_subcommand("validate", "Numeric check of model assumptions");
    add_model_flags(validate, val_model, true, "Drift S(x)");
    validate->add_option("--eps", val_eps, "Noise level")->capture_default_str();
    validate->add_option("--lo", lo, "Working interval lower end");
    validate->add_option("--hi", hi, "Working interval upper end");

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    try {
        if (*test) {
            std::ifstream in(data_file);
            if (!in) {
                throw DataError("cannot open data file '" + data_file + "'", 0);
            }
            const auto parsed = io::parse_path_csv(in, eps);
            for (const auto& w : parsed.warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            const auto s0 = expr::Expression::parse(null_drift);
            const auto report = stat::run_test(parsed.path, s0, alpha);
            if (!curve_out.empty()) {
                write_file(curve_out, [&](std::ostream& o) { io::write_curve_csv(o, report.curve); });
            }
            ordered_json j;
            j["command"] = "test";
            j["config"] = {{"data", data_file}, {"eps", eps}, {"null_drift", s0.print()}, {"alpha", alpha}};
            j["report"] = io::to_json(report, parsed.path);
            j["warnings"] = parsed.warnings;
            j["timestamp"] = timestamp();
            emit(j);
            return report.reject ? kExitReject : 0;
        }
        if (*simulate) {
            const model::ModelSpec spec(expr::Expression::parse(sim_model.drift),
                                        expr::Expression::parse(sim_model.sigma), sim_model.x0, sim_model.T,
                                        sim_eps);
            const auto grid = sim::make_grid(spec.horizon(), sim_eps, gamma, parse_layout(layout), {seed, 0});
            for (const auto& w : grid.warnings()) {
                std::cerr << "warning: " << w << '\n';
            }
            const auto path = sim::simulate_path(spec, grid, substeps, {seed, 0});
            ordered_json meta;
            meta["command"] = "simulate";
            meta["config"] = {{"drift", spec.drift().print()}, {"sigma", spec.diffusion().print()},
                              {"x0", spec.x0()},           {"T", spec.horizon()},
                              {"eps", sim_eps},            {"gamma", gamma},
                              {"substeps", substeps},      {"seed", seed},
                              {"layout", layout}};
            meta["n_obs"] = path.values.size();
            meta["mesh"] = grid.mesh();
            meta["scheme_ok"] = grid.scheme_ok();
            meta["timestamp"] = timestamp();
            if (out_file.empty()) {
                io::write_path_csv(std::cout, path);
            } else {
                write_file(out_file, [&](std::ostream& o) { io::write_path_csv(o, path); });
                write_file(out_file + ".json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
            }
            return 0;
        }
        if (*quantile) {
            std::cout << io::format_double(limitdist::standard().quantile(p)) << '\n';
            return 0;
        }
        if (*pvalue) {
            std::cout << io::format_double(limitdist::standard().p_value(d)) << '\n';
            return 0;
        }
        if (*size || *power || *sweep) {
            const bool is_power = power->parsed();
            const auto& flags = *size ? size_flags : (is_power ? power_flags : sweep_flags);
            const auto cfg = make_config(flags, is_power);
            ordered_json j;
            j["command"] = *size ? "size" : (is_power ? "power" : "sweep");
            j["config"] = io::to_json(cfg);
            if (*sweep) {
                const auto report = harness::run_convergence_sweep(cfg);
                j["report"] = io::to_json(report, false);
                j["timestamp"] = timestamp();
                if (!flags.csv_out.empty()) {
                    write_file(flags.csv_out, [&](std::ostream& o) { io::write_report_csv(o, report); });
                }
                for (const auto& row : report.rows) {
                    std::cerr << printf_string("eps=%.4g sup|U-V|=%.4f sup|V-M|=%.4f sigma_hat_err=%.4f\n",
                                             row.eps, row.median_sup_u_minus_v, row.median_sup_v_minus_m,
                                             row.median_sigma_hat_error);
                }
                std::cerr << printf_string("wall time %.4f s\n", report.wall_seconds);
            } else {
                const auto report = is_power ? harness::run_power_experiment(cfg) : harness::run_size_experiment(cfg);
                j["report"] = io::to_json(report, false);
                j["timestamp"] = timestamp();
                if (!flags.csv_out.empty()) {
                    write_file(flags.csv_out, [&](std::ostream& o) { io::write_report_csv(o, report); });
                }
                for (const auto& row : report.rows) {
                    std::cerr << printf_string("eps=%.4g rate=%.4f ci=[%.4f, %.4f] errors=%zu\n", row.eps,
                                             row.rejection_rate, row.wilson_ci_lo, row.wilson_ci_hi, row.errors);
                }
                std::cerr << printf_string("wall time %.4f s\n", report.wall_seconds);
            }
            emit(j);
            return 0;
        }
        if (*validate) {
            const model::ModelSpec spec(expr::Expression::parse(val_model.drift),
                                        expr::Expression::parse(val_model.sigma), val_model.x0, val_model.T,
                                        val_eps);
            std::optional<std::pair<double, double>> interval;
            if (lo || hi) {
                if (!lo || !hi) {
                    std::cerr << "error: --lo and --hi must be given together\n\n" << validate->help();
                    return kExitUsage;
                }
                interval = std::pair{*lo, *hi};
            }
            ordered_json j;
            j["command"] = "validate";
            j["config"] = {{"drift", spec.drift().print()}, {"sigma", spec.diffusion().print()},
                           {"x0", spec.x0()},           {"T", spec.horizon()},
                           {"eps", spec.eps()}};
            j["report"] = io::to_json(model::validate(spec, interval));
            j["timestamp"] = timestamp();
            emit(j);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
