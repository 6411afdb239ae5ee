#include <benchmark/benchmark.h>

#include <random>

#include "rdime/dime.hpp"
#include "rdime/retrieval.hpp"
#include "rdime/selection.hpp"

namespace {

rdime::EmbeddingMatrix make_corpus(std::size_t n, std::size_t p) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> normal;
    std::vector<std::string> ids(n);
    std::vector<float> values(n * p);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = "d" + std::to_string(i);
    }
    for (auto& v : values) {
        v = normal(rng);
    }
    return rdime::EmbeddingMatrix(std::move(ids), p, std::move(values));
}

std::vector<float> make_query(std::size_t p) {
    std::mt19937_64 rng(2);
    std::normal_distribution<float> normal;
    std::vector<float> q(p);
    for (auto& v : q) {
        v = normal(rng);
    }
    return q;
}

rdime::SelectionMask half_mask(std::size_t p) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < p; j += 2) {
        idx.push_back(j);
    }
    return rdime::SelectionMask(p, idx, "half");
}

void BM_MaskedScore(benchmark::State& state) {
    const std::size_t p = static_cast<std::size_t>(state.range(0));
    const auto q = make_query(p);
    const auto corpus = make_corpus(1, p);
    const auto mask = half_mask(p);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rdime::masked_score(q, corpus.row(0), mask));
    }
}
BENCHMARK(BM_MaskedScore)->Arg(128)->Arg(768);

void BM_RankAll(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t p = 768;
    const auto corpus = make_corpus(n, p);
    const auto q = make_query(p);
    const auto mask = half_mask(p);
    rdime::ScoringConfig cfg;
    cfg.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rdime::rank_all(q, corpus, mask, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RankAll)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Selection(benchmark::State& state) {
    const std::size_t p = 768;
    const auto qf = make_query(p);
    const rdime::Vector q(qf.begin(), qf.end());
    const auto docs = make_corpus(2, p);
    const rdime::DocumentSet set = {rdime::to_vector(docs.row(0)), rdime::to_vector(docs.row(1))};
    const auto u = rdime::estimate(q, set, rdime::scheme::Uniform{});
    for (auto _ : state) {
        if (state.range(0) == 0) {
            benchmark::DoNotOptimize(rdime::topk_select(u, 0.6));
        } else {
            benchmark::DoNotOptimize(rdime::rdime_select(q, u));
        }
    }
}
BENCHMARK(BM_Selection)->ArgName("rdime")->Arg(0)->Arg(1);

}
BENCHMARK_MAIN();
