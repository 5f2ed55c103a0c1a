#pragma once

// Output files: a two-line header (tool version, config echo) followed by
// CSV rows or key=value report lines.

#include "blowup/quad.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace blowup {

inline constexpr std::string_view kToolName = "blowup";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// The validated command line of one run, echoed into every output.
struct RunConfig {
    std::string command;
    /// Flag name (without dashes) -> value exactly as given.
    std::map<std::string, std::string> flags;

    bool operator==(const RunConfig&) const = default;

    std::string to_json() const;
    static RunConfig from_json(std::string_view text);
};

/// "# blowup <version>" and "# config: <json>".
void write_header(std::ostream& out, const RunConfig& config);

/// Reads the two header lines back.
RunConfig read_header(std::istream& in);

/// Columns eps,value,err,converged.
void write_series_csv(std::ostream& out, const IntegralSeries& series);

/// Reads a series CSV; lines starting with '#' are skipped.
IntegralSeries read_series_csv(std::istream& in);

/// key=value lines, classification first. Keys get `prefix` prepended.
void write_diagnosis_report(std::ostream& out, const DivergenceDiagnosis& d, std::string_view prefix = "");

/// Parses key=value lines (skipping '#' comments and blank lines), in order.
std::vector<std::pair<std::string, std::string>> read_report(std::istream& in);

/// Inverse of write_diagnosis_report for the given prefix.
DivergenceDiagnosis diagnosis_from_report(const std::vector<std::pair<std::string, std::string>>& entries,
                                          std::string_view prefix = "");

/// Writes `content` to `path`; the empty path or "-" means `fallback`.
void emit(const std::string& content, const std::string& path, std::ostream& fallback);

} // namespace blowup
