#pragma once

#include <string>

#include "capabench/evaluation.hpp"

namespace capabench {

/// Rounds to 3 decimal places, the precision of every rendered rate.
double round3(double value);

/// Full report: results with counts, rates and deltas, per-template ratios, per-entity
/// breakdowns and the template histogram.
std::string report_json(const SuiteReport& report);
/// One row per TestResult; baseline columns are empty without a baseline.
std::string report_csv(const SuiteReport& report);
/// Human-readable summary table.
std::string report_markdown(const SuiteReport& report);
/// Dot-plot coordinates (pass rate against baseline recall per test) and per-test
/// histograms of per-template pass ratios.
std::string plot_data_json(const SuiteReport& report, std::size_t n_bins = 10);

}  // namespace capabench
