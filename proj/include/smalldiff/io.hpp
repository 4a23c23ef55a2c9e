#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smalldiff/harness.hpp"
#include "smalldiff/model.hpp"
#include "smalldiff/simulate.hpp"
#include "smalldiff/statistic.hpp"

namespace smalldiff::io {

/// 17 significant digits, enough to read back exactly `v`.
[[nodiscard]] std::string format_double(double v);

struct ParsedPath {
    sim::ObservedPath path;
    std::vector<std::string> warnings;
};

/// Reads a `t,x` CSV of observations. Times must start at 0 and strictly
/// increase; at least two rows. A warning is attached when the mesh exceeds
/// eps^2. Throws DataError (with line number where applicable).
[[nodiscard]] ParsedPath parse_path_csv(std::istream& in, double eps);
[[nodiscard]] ParsedPath parse_path_csv(std::string_view text, double eps);

/// Writes `t,x` with one row per observation, full precision.
void write_path_csv(std::ostream& out, const sim::ObservedPath& path);

/// Writes `u,value` rows of a curve.
void write_curve_csv(std::ostream& out, const stat::TestCurve& curve);

[[nodiscard]] nlohmann::ordered_json to_json(const model::ValidationReport& report);
[[nodiscard]] nlohmann::ordered_json to_json(const stat::TestReport& report, const sim::ObservedPath& path);
[[nodiscard]] nlohmann::ordered_json to_json(const sim::MomentReport& report);

/// Harness reports. Wall time is included only when `include_timing` is set,
/// so the remaining output is a pure function of the configuration.
[[nodiscard]] nlohmann::ordered_json to_json(const harness::McReport& report, bool include_timing);
[[nodiscard]] nlohmann::ordered_json to_json(const harness::SweepReport& report, bool include_timing);
[[nodiscard]] nlohmann::ordered_json to_json(const harness::ExperimentConfig& cfg);

void write_report_csv(std::ostream& out, const harness::McReport& report);
void write_report_csv(std::ostream& out, const harness::SweepReport& report);

}  // namespace smalldiff::io
