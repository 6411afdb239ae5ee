#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdime/embedding_store.hpp"
#include "rdime/selection.hpp"

namespace rdime {

/**
 * nDCG at cutoff k with gain 2^grade - 1 and discount log2(rank + 1).
 *
 * The ideal ordering is built from every judged document of the query, not only
 * the retrieved ones. Queries without any relevant judgment score 0.
 */
double ndcg_at_k(const RunRanking& run, const Qrels& qrels, std::size_t k = 10);

/// Binary relevance (grade >= 1); normalized by the number of relevant documents in the qrels.
double average_precision(const RunRanking& run, const Qrels& qrels);

enum class Metric { NdcgAtK, AveragePrecision };

/// "ndcg@<k>" or "ap".
std::string metric_name(Metric m, std::size_t k = 10);

struct MetricReport {
    std::string metric_name;
    /// Per-query values in input order.
    std::vector<std::pair<std::string, double>> per_query;
    double mean = 0.0;

    std::vector<double> values() const;
};

MetricReport evaluate(Metric metric, std::span<const RunRanking> runs, const Qrels& qrels, std::size_t k = 10);

/// Mean of the values as a left-to-right sum divided by the count; 0 for an empty range.
double mean_of(std::span<const double> values);

struct RetainedFractionSummary {
    std::vector<double> fractions;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

/// Quantile with linear interpolation between order statistics at position (n - 1) * prob.
double quantile(std::vector<double> values, double prob);

RetainedFractionSummary retained_fraction_summary(std::span<const SelectionMask> masks);

}
