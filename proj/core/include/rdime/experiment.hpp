#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rdime/dime.hpp"
#include "rdime/embedding_store.hpp"
#include "rdime/metrics.hpp"
#include "rdime/retrieval.hpp"
#include "rdime/selection.hpp"
#include "rdime/significance.hpp"

/**
 * @file experiment.hpp
 *
 * @brief End-to-end retrieval comparison driven by a JSON config.
 *
 * For every query: pick feedback documents (a first-stage run, per-query
 * synthetic documents, or the top M of a full-dimension search), score the
 * dimensions, apply each selection policy, rank the corpus on the retained
 * dimensions and evaluate. RDIME is then compared against every other policy
 * and against the best Top-k, per metric, with Holm correction across the
 * comparisons of a metric.
 *
 * Output directory layout:
 *
 *     config.json            normalized snapshot of the config
 *     runs/<policy>.run      TREC run per policy
 *     metrics.csv            policy,metric,query_id,value (query_id "all" holds the mean)
 *     significance.csv       comparison,test,statistic,p,reject
 *     masks.csv              query_id,policy,retained,dim,fraction
 *     retained_summary.csv   per-policy min/quartiles/max/mean of the retained fraction
 *     results.csv            model,estimator,collection,policy,<ndcg@k>,retained_fraction
 *     results_ap.csv         same with AP
 */

namespace rdime {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::filesystem::path queries;
    std::filesystem::path corpus;
    std::filesystem::path qrels;
    std::optional<std::filesystem::path> first_stage_run;
    /// Ids "<qid>" or "<qid>#<anything>" attach a document to query <qid>.
    std::optional<std::filesystem::path> synthetic_docs;

    WeightScheme estimator = scheme::Uniform{};
    std::string estimator_label;
    std::size_t feedback_docs = 2;
    std::vector<SelectionPolicy> policies;
    std::size_t cutoff = 10;
    std::size_t top_n = 1000;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    Similarity similarity = Similarity::DotProduct;
    Alternative t_alternative = Alternative::TwoSided;
    Alternative wilcoxon_alternative = Alternative::Greater;
    std::string model = "model";
    std::string collection = "collection";

    /// Value ranges and file existence; throws ConfigError.
    void validate() const;
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = std::filesystem::path());
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Round-trips through parse_experiment_config.
std::string config_to_json(const ExperimentConfig& config);

struct PolicyOutcome {
    std::string policy;
    std::vector<RunRanking> runs;
    std::vector<SelectionMask> masks;
    MetricReport ndcg;
    MetricReport ap;
    RetainedFractionSummary retained;
};

struct Comparison {
    std::string metric;
    std::string label;
    SigTestResult result;
};

struct ExperimentResult {
    std::vector<std::string> query_ids;
    std::vector<PolicyOutcome> policies;
    std::vector<Comparison> comparisons;

    const PolicyOutcome* find(std::string_view policy) const;
};

/// Loads the inputs named by the config and runs every query. Input problems throw ConfigError or StoreError.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads = 0);

/// Same pipeline on already-loaded inputs.
ExperimentResult run_experiment(const ExperimentConfig& config, const EmbeddingMatrix& queries,
                                const EmbeddingMatrix& corpus, const Qrels& qrels,
                                const std::vector<RunRanking>* first_stage, const EmbeddingMatrix* synthetic,
                                std::size_t threads = 0);

/// File-system safe name of a policy, e.g. "topk-0.4".
std::string policy_file_stem(const std::string& policy);

/// Writes the layout described above into `out_dir`, creating it if needed.
void write_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                      const std::filesystem::path& out_dir);

}
