#include "rdime/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace rdime {

namespace {

double gain(int grade) {
    return std::exp2(static_cast<double>(grade)) - 1.0;
}

double discount(std::size_t rank) {
    return std::log2(static_cast<double>(rank) + 1.0);
}

}

double ndcg_at_k(const RunRanking& run, const Qrels& qrels, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("nDCG cutoff must be at least 1");
    }
    const auto* judged = qrels.judged(run.query_id);
    if (judged == nullptr) {
        return 0.0;
    }

    std::vector<int> ideal;
    for (const auto& [doc, grade] : *judged) {
        if (grade > 0) {
            ideal.push_back(grade);
        }
    }
    if (ideal.empty()) {
        return 0.0;
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) {
        idcg += gain(ideal[r]) / discount(r + 1);
    }

    double dcg = 0.0;
    const std::size_t depth = std::min(k, run.entries.size());
    for (std::size_t r = 0; r < depth; ++r) {
        const int g = qrels.grade(run.query_id, run.entries[r].doc_id);
        if (g > 0) {
            dcg += gain(g) / discount(r + 1);
        }
    }
    return dcg / idcg;
}

double average_precision(const RunRanking& run, const Qrels& qrels) {
    const auto* judged = qrels.judged(run.query_id);
    if (judged == nullptr) {
        return 0.0;
    }
    std::size_t total_relevant = 0;
    for (const auto& [doc, grade] : *judged) {
        if (grade >= 1) {
            ++total_relevant;
        }
    }
    if (total_relevant == 0) {
        return 0.0;
    }

    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < run.entries.size(); ++r) {
        if (qrels.grade(run.query_id, run.entries[r].doc_id) >= 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

std::string metric_name(Metric m, std::size_t k) {
    return m == Metric::NdcgAtK ? "ndcg@" + std::to_string(k) : std::string("ap");
}

std::vector<double> MetricReport::values() const {
    std::vector<double> out;
    out.reserve(per_query.size());
    for (const auto& [q, v] : per_query) {
        out.push_back(v);
    }
    return out;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (double v : values) {
        acc += v;
    }
    return acc / static_cast<double>(values.size());
}

MetricReport evaluate(Metric metric, std::span<const RunRanking> runs, const Qrels& qrels, std::size_t k) {
    MetricReport report;
    report.metric_name = metric_name(metric, k);
    report.per_query.reserve(runs.size());
    for (const auto& run : runs) {
        const double v = metric == Metric::NdcgAtK ? ndcg_at_k(run, qrels, k) : average_precision(run, qrels);
        report.per_query.emplace_back(run.query_id, v);
    }
    const auto values = report.values();
    report.mean = mean_of(values);
    return report;
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw std::invalid_argument("quantile probability must be in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

RetainedFractionSummary retained_fraction_summary(std::span<const SelectionMask> masks) {
    if (masks.empty()) {
        throw std::invalid_argument("retained fraction summary of zero masks");
    }
    RetainedFractionSummary s;
    s.fractions.reserve(masks.size());
    for (const auto& m : masks) {
        s.fractions.push_back(m.fraction());
    }
    s.min = *std::min_element(s.fractions.begin(), s.fractions.end());
    s.max = *std::max_element(s.fractions.begin(), s.fractions.end());
    s.q1 = quantile(s.fractions, 0.25);
    s.median = quantile(s.fractions, 0.5);
    s.q3 = quantile(s.fractions, 0.75);
    s.mean = mean_of(s.fractions);
    return s;
}

}
