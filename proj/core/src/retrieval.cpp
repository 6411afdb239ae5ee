#include "rdime/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rdime/parallel.hpp"

namespace rdime {

namespace {

constexpr std::size_t kScoreBlock = 4096;

void check_dims(std::span<const float> q, std::span<const float> d, const char* what) {
    if (q.size() != d.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(q.size()) +
                                    " vs " + std::to_string(d.size()) + ")");
    }
}

void check_mask(std::span<const float> q, const SelectionMask& mask, const char* what) {
    if (mask.dim() != q.size()) {
        throw std::invalid_argument(std::string(what) + ": mask has " + std::to_string(mask.dim()) +
                                    " dims, vectors have " + std::to_string(q.size()));
    }
}

}

double dot(std::span<const float> q, std::span<const float> d) {
    check_dims(q, d, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        acc += static_cast<double>(q[i]) * static_cast<double>(d[i]);
    }
    return acc;
}

double masked_score(std::span<const float> q, std::span<const float> d, const SelectionMask& mask) {
    check_dims(q, d, "masked_score");
    check_mask(q, mask, "masked_score");
    double acc = 0.0;
    for (std::size_t i : mask.retained()) {
        acc += static_cast<double>(q[i]) * static_cast<double>(d[i]);
    }
    return acc;
}

double masked_cosine(std::span<const float> q, std::span<const float> d, const SelectionMask& mask) {
    check_dims(q, d, "masked_cosine");
    check_mask(q, mask, "masked_cosine");
    double num = 0.0;
    double qq = 0.0;
    double dd = 0.0;
    for (std::size_t i : mask.retained()) {
        const double a = q[i];
        const double b = d[i];
        num += a * b;
        qq += a * a;
        dd += b * b;
    }
    if (qq == 0.0 || dd == 0.0) {
        return 0.0;
    }
    return num / (std::sqrt(qq) * std::sqrt(dd));
}

RunRanking rank_all(std::span<const float> q, const EmbeddingMatrix& corpus, const SelectionMask& mask,
                    const ScoringConfig& config, const std::string& query_id, const std::string& tag) {
    if (corpus.empty()) {
        throw std::invalid_argument("rank_all: empty corpus");
    }
    if (config.top_n == 0) {
        throw std::invalid_argument("rank_all: top_n must be at least 1");
    }
    if (q.size() != corpus.dim()) {
        throw std::invalid_argument("rank_all: query has " + std::to_string(q.size()) + " dims, corpus has " +
                                    std::to_string(corpus.dim()));
    }
    check_mask(q, mask, "rank_all");

    const std::size_t n = corpus.size();
    std::vector<double> scores(n);
    const bool cosine = config.similarity == Similarity::Cosine;
    const std::size_t threads = config.threads == 0 ? default_threads() : config.threads;
    parallel_blocks(n, kScoreBlock, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            scores[i] = cosine ? masked_cosine(q, corpus.row(i), mask) : masked_score(q, corpus.row(i), mask);
        }
    });

    const std::size_t keep = std::min(config.top_n, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return scores[a] > scores[b] || (scores[a] == scores[b] && corpus.id(a) < corpus.id(b));
                      });

    RunRanking run;
    run.query_id = query_id;
    run.tag = tag;
    run.entries.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) {
        run.entries.push_back(RunEntry{corpus.id(order[r]), scores[order[r]], r + 1});
    }
    return run;
}

std::vector<FeedbackDocument> first_stage_top_m(std::span<const float> q, const EmbeddingMatrix& corpus,
                                                std::size_t m, std::size_t threads) {
    if (m == 0) {
        throw std::invalid_argument("first stage needs M >= 1");
    }
    if (m > corpus.size()) {
        throw std::invalid_argument("first stage asks for M = " + std::to_string(m) + " documents from a corpus of " +
                                    std::to_string(corpus.size()));
    }
    ScoringConfig config;
    config.top_n = m;
    config.threads = threads;
    const auto run = rank_all(q, corpus, SelectionMask::full(corpus.dim(), "full"), config);
    std::vector<FeedbackDocument> out;
    out.reserve(m);
    for (const auto& e : run.entries) {
        out.push_back(FeedbackDocument{e.doc_id, to_vector(corpus.row(*corpus.find(e.doc_id)))});
    }
    return out;
}

std::vector<FeedbackDocument> pseudo_relevant_from_run(const RunRanking& run, const EmbeddingMatrix& corpus,
                                                       std::size_t m) {
    if (m == 0) {
        throw std::invalid_argument("pseudo-relevance feedback needs M >= 1");
    }
    if (m > run.entries.size()) {
        throw std::invalid_argument("run for query " + run.query_id + " has " + std::to_string(run.entries.size()) +
                                    " entries, fewer than M = " + std::to_string(m));
    }
    std::vector<FeedbackDocument> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& id = run.entries[i].doc_id;
        const auto row = corpus.find(id);
        if (!row) {
            throw std::invalid_argument("run for query " + run.query_id + " references unknown document '" + id +
                                        "'");
        }
        out.push_back(FeedbackDocument{id, to_vector(corpus.row(*row))});
    }
    return out;
}

DocumentSet vectors_of(const std::vector<FeedbackDocument>& docs) {
    DocumentSet out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        out.push_back(d.values);
    }
    return out;
}

}
