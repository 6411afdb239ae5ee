#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "rdime/embedding_store.hpp"

namespace rdime::testing {

struct FixtureSpec {
    std::size_t queries = 50;
    std::size_t dim = 128;
    std::size_t corpus = 5000;
    std::size_t relevant_per_query = 10;
    /// Half the dims carry |theta| = strong, the rest |theta| = weak; signs and positions are random.
    double strong = 1.0;
    double weak = 0.05;
    double query_noise = 0.3;
    double doc_noise = 0.3;
    std::uint64_t seed = 7;
};

struct Fixture {
    EmbeddingMatrix queries;
    EmbeddingMatrix corpus;
    Qrels qrels;
};

/// Per query a latent signal; the query and its relevant documents are noisy copies of it.
/// Every other document is standard normal noise. Relevant documents get grade 1.
Fixture make_fixture(const FixtureSpec& spec = {});

/// Writes queries.emb, corpus.emb and qrels.txt into `dir`.
void write_fixture(const Fixture& f, const std::filesystem::path& dir);

}
