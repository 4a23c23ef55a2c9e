#include "smalldiff/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "smalldiff/error.hpp"

namespace smalldiff::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_field(std::string_view field, std::size_t line, const char* name) {
    field = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw DataError(std::string("malformed ") + name + " value '" + std::string(field) + "'", line);
    }
    return value;
}

nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), ptr);
}

ParsedPath parse_path_csv(std::istream& in, double eps) {
    if (!(eps > 0.0) || eps > 1.0) {
        throw DataError("eps must lie in (0, 1]", 0);
    }
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        if (!header_seen) {
            if (text != "t,x") {
                throw DataError("expected header 't,x'", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto comma = text.find(',');
        if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
            throw DataError("expected two comma-separated fields", line_no);
        }
        const double t = parse_field(text.substr(0, comma), line_no, "t");
        const double x = parse_field(text.substr(comma + 1), line_no, "x");
        if (times.empty() && t != 0.0) {
            throw DataError("first observation time must be 0", line_no);
        }
        if (!times.empty() && !(t > times.back())) {
            throw DataError("observation times must be strictly increasing", line_no);
        }
        times.push_back(t);
        values.push_back(x);
    }
    if (!header_seen) {
        throw DataError("empty input: expected header 't,x'", 0);
    }
    if (times.size() < 2) {
        throw DataError("need at least two observations", 0);
    }

    sim::SamplingGrid grid(std::move(times));
    ParsedPath parsed{sim::ObservedPath{grid, std::move(values), eps, 0, std::nullopt}, {}};
    const bool fine_enough = grid.mesh() <= eps * eps;
    parsed.path.grid.set_scheme_ok(fine_enough);
    if (!fine_enough) {
        parsed.warnings.push_back("mesh " + format_double(grid.mesh()) + " exceeds eps^2 = " +
                                  format_double(eps * eps) + ": sampling may be too coarse for the test");
    }
    return parsed;
}

ParsedPath parse_path_csv(std::string_view text, double eps) {
    std::istringstream in{std::string(text)};
    return parse_path_csv(in, eps);
}

void write_path_csv(std::ostream& out, const sim::ObservedPath& path) {
    out << "t,x\n";
    const auto t = path.grid.times();
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << format_double(t[i]) << ',' << format_double(path.values[i]) << '\n';
    }
}

void write_curve_csv(std::ostream& out, const stat::TestCurve& curve) {
    out << "u,value\n";
    for (std::size_t i = 0; i < curve.u_grid.size(); ++i) {
        out << format_double(curve.u_grid[i]) << ',' << format_double(curve.values[i]) << '\n';
    }
}

nlohmann::ordered_json to_json(const model::ValidationReport& report) {
    nlohmann::ordered_json j;
    j["lipschitz_drift"] = report.lipschitz_drift;
    j["lipschitz_sigma"] = report.lipschitz_sigma;
    j["sigma_limit"] = report.sigma_limit;
    j["a3_ok"] = report.a3_ok;
    j["eps_ok"] = report.eps_ok;
    j["h_condition"] = report.h_condition;
    j["working_interval"] = {report.working_interval.first, report.working_interval.second};
    j["warnings"] = report.warnings;
    return j;
}

nlohmann::ordered_json to_json(const stat::TestReport& report, const sim::ObservedPath& path) {
    nlohmann::ordered_json j;
    j["statistic"] = report.statistic;
    j["p_value"] = report.p_value;
    j["alpha"] = report.alpha;
    j["reject"] = report.reject;
    j["critical_value"] = report.critical_value;
    j["sigma_hat"] = report.sigma_hat.sigma_hat;
    j["sup_u"] = report.curve.sup_abs;
    j["n_obs"] = path.values.size();
    j["eps"] = path.eps;
    j["mesh"] = path.grid.mesh();
    return j;
}

nlohmann::ordered_json to_json(const sim::MomentReport& report) {
    nlohmann::ordered_json j;
    j["c2"] = report.c2;
    j["c4"] = report.c4;
    j["n_paths"] = report.n_paths;
    j["n_intervals"] = report.n_intervals;
    j["eps"] = report.eps;
    j["mesh"] = report.mesh;
    return j;
}

nlohmann::ordered_json to_json(const harness::ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["null_drift"] = cfg.null_drift.print();
    j["alt_drift"] = cfg.alt_drift ? nlohmann::ordered_json(cfg.alt_drift->print()) : nullptr;
    j["sigma"] = cfg.model.diffusion().print();
    j["x0"] = cfg.model.x0();
    j["T"] = cfg.model.horizon();
    j["gamma"] = cfg.gamma;
    j["substeps"] = cfg.substeps;
    j["replications"] = cfg.replications;
    j["alpha"] = cfg.alpha;
    j["seed"] = cfg.base_seed;
    j["eps"] = cfg.eps_list;
    j["layout"] = cfg.layout == sim::GridLayout::Uniform ? "uniform" : "jittered";
    return j;
}

nlohmann::ordered_json to_json(const harness::McReport& report, bool include_timing) {
    nlohmann::ordered_json j;
    j["kind"] = report.kind;
    if (report.separation) {
        j["separation"] = *report.separation;
        j["u_star"] = *report.u_star;
    }
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["eps"] = r.eps;
        row["n_reps"] = r.n_reps;
        row["rejections"] = r.rejections;
        row["acceptances"] = r.acceptances;
        row["errors"] = r.errors;
        row["rejection_rate"] = r.rejection_rate;
        row["wilson_ci_lo"] = r.wilson_ci_lo;
        row["wilson_ci_hi"] = r.wilson_ci_hi;
        row["median_statistic"] = number_or_null(r.median_statistic);
        row["median_sigma_hat_error"] = number_or_null(r.median_sigma_hat_error);
        row["sigma_limit"] = r.sigma_limit;
        row["n_obs"] = r.n_obs;
        row["mesh"] = r.mesh;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    if (include_timing) {
        j["wall_seconds"] = report.wall_seconds;
    }
    return j;
}

nlohmann::ordered_json to_json(const harness::SweepReport& report, bool include_timing) {
    nlohmann::ordered_json j;
    j["kind"] = "sweep";
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["eps"] = r.eps;
        row["n_reps"] = r.n_reps;
        row["median_sup_u_minus_v"] = number_or_null(r.median_sup_u_minus_v);
        row["median_sup_v_minus_m"] = number_or_null(r.median_sup_v_minus_m);
        row["median_sigma_hat_error"] = number_or_null(r.median_sigma_hat_error);
        row["sigma_limit"] = r.sigma_limit;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    j["u_minus_v_decreasing"] = report.u_minus_v_decreasing;
    j["v_minus_m_decreasing"] = report.v_minus_m_decreasing;
    j["sigma_hat_error_decreasing"] = report.sigma_hat_error_decreasing;
    if (include_timing) {
        j["wall_seconds"] = report.wall_seconds;
    }
    return j;
}

void write_report_csv(std::ostream& out, const harness::McReport& report) {
    out << "eps,rate,ci_lo,ci_hi,n_reps,rejections,errors,median_statistic,median_sigma_hat_error\n";
    for (const auto& r : report.rows) {
        out << format_double(r.eps) << ',' << format_double(r.rejection_rate) << ','
            << format_double(r.wilson_ci_lo) << ',' << format_double(r.wilson_ci_hi) << ',' << r.n_reps << ','
            << r.rejections << ',' << r.errors << ',' << format_double(r.median_statistic) << ','
            << format_double(r.median_sigma_hat_error) << '\n';
    }
}

void write_report_csv(std::ostream& out, const harness::SweepReport& report) {
    out << "eps,n_reps,median_sup_u_minus_v,median_sup_v_minus_m,median_sigma_hat_error\n";
    for (const auto& r : report.rows) {
        out << format_double(r.eps) << ',' << r.n_reps << ',' << format_double(r.median_sup_u_minus_v) << ','
            << format_double(r.median_sup_v_minus_m) << ',' << format_double(r.median_sigma_hat_error) << '\n';
    }
}

}  // namespace smalldiff::io
