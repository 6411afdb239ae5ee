#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rdime/dime.hpp"
#include "rdime/embedding_store.hpp"
#include "rdime/selection.hpp"

/**
 * @file retrieval.hpp
 *
 * @brief Exact inner-product search restricted to a per-query set of dimensions.
 *
 * Scores are accumulated in double from f32 inputs, always over retained
 * indices in increasing order. A full mask therefore reproduces the plain dot
 * product bit for bit.
 */

namespace rdime {

enum class Similarity { DotProduct, Cosine };

struct ScoringConfig {
    Similarity similarity = Similarity::DotProduct;
    std::size_t top_n = 1000;
    /// 0 means default_threads().
    std::size_t threads = 0;
};

double dot(std::span<const float> q, std::span<const float> d);

double masked_score(std::span<const float> q, std::span<const float> d, const SelectionMask& mask);

/// Cosine over retained dimensions only; 0 when either restricted norm is zero.
double masked_cosine(std::span<const float> q, std::span<const float> d, const SelectionMask& mask);

/**
 * @brief Ranks the whole corpus for one query and keeps the best `top_n`.
 *
 * Order is score descending, then document id ascending. Scoring fans out over
 * fixed corpus blocks; each score depends only on (q, d, mask), so the result
 * does not depend on the thread count.
 */
RunRanking rank_all(std::span<const float> q, const EmbeddingMatrix& corpus, const SelectionMask& mask,
                    const ScoringConfig& config, const std::string& query_id = {}, const std::string& tag = {});

struct FeedbackDocument {
    std::string id;
    Vector values;
};

/// The M best documents by full-dimensional dot product, in rank order.
std::vector<FeedbackDocument> first_stage_top_m(std::span<const float> q, const EmbeddingMatrix& corpus,
                                                std::size_t m, std::size_t threads = 0);

/// Vectors for the first M documents of an external run, in rank order.
std::vector<FeedbackDocument> pseudo_relevant_from_run(const RunRanking& run, const EmbeddingMatrix& corpus,
                                                       std::size_t m);

DocumentSet vectors_of(const std::vector<FeedbackDocument>& docs);

}
