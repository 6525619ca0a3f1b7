#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ape/ape_builder.hpp"
#include "ape/config.hpp"

namespace ape {

/// x rounded to six significant digits.
double sig6(double x);

nlohmann::ordered_json report_to_json(const ApeReport& report, const RunConfig& cfg);

/// Supports, weights, multipliers, surfaces and verdict from report.json.
/// The envelope test is rebuilt when `assembled` is given.
ApeReport report_from_json(const nlohmann::json& j, const Assembled* assembled = nullptr);
ApeReport load_report(const std::filesystem::path& path, const Assembled* assembled = nullptr);

void write_weights_csv(const ApeReport& report, std::ostream& out);
void write_null_csv(const ApeReport& report, std::ostream& out);
void write_lfd_csv(const ApeReport& report, std::ostream& out);
void write_history_csv(const ApeReport& report, std::ostream& out);
std::string summary_text(const ApeReport& report);

/// report.json, heatmap.csv, weights.csv, null_diagnostics.csv, lfd.csv,
/// refinements.csv, outer_trace.csv and summary.txt under dir.
void write_report_files(const ApeReport& report, const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace ape
