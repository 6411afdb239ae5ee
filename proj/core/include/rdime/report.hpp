#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * @file report.hpp
 *
 * @brief Aggregates experiment results into comparison tables.
 *
 * Every `results.csv` or `results_*.csv` below a directory contributes rows
 * "model,estimator,collection,policy,<metric>,retained_fraction". Rows are grouped
 * by (model, estimator, collection, metric); each group needs an "rdime" row and
 * at least one Top-k row. The relative change of RDIME over the best Top-k is
 * 100 (rdime - best) / best, rounded to two decimals.
 */

namespace rdime {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolicyCell {
    std::string policy;
    double value = 0.0;
    double retained_fraction = 0.0;
};

struct ReportRow {
    std::string model;
    std::string estimator;
    std::string collection;
    std::string metric;
    std::vector<PolicyCell> cells;
    std::string best_topk;
    double best_topk_value = 0.0;
    double rdime_value = 0.0;
    double rdime_fraction = 0.0;
    /// Unrounded; NaN when the best Top-k is 0 and RDIME is not.
    double delta_pct = 0.0;
};

struct Report {
    std::vector<ReportRow> rows;
    std::string text;
};

double delta_percent(double rdime, double best_topk);

/// Two-decimal rendering of a percentage, never "-0.00".
std::string format_delta(double delta_pct);

/// Reads and aggregates; throws ReportError when nothing is found or a group is incomplete.
Report build_report(const std::filesystem::path& results_dir);

/// build_report, then writes report.csv and report.txt into `results_dir`.
Report run_report(const std::filesystem::path& results_dir);

}
