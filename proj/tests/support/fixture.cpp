#include "support/fixture.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace rdime::testing {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

}

Fixture make_fixture(const FixtureSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    const std::size_t p = spec.dim;
    std::vector<std::size_t> slots(spec.corpus);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    std::shuffle(slots.begin(), slots.end(), rng);

    std::vector<float> corpus(spec.corpus * p);
    std::vector<bool> filled(spec.corpus, false);
    std::vector<std::string> qids;
    std::vector<float> qvals;
    Fixture f;

    std::vector<std::size_t> dims(p);
    for (std::size_t qi = 0; qi < spec.queries; ++qi) {
        std::iota(dims.begin(), dims.end(), std::size_t{0});
        std::shuffle(dims.begin(), dims.end(), rng);
        std::vector<double> theta(p);
        for (std::size_t k = 0; k < p; ++k) {
            const double mag = k < p / 2 ? spec.strong : spec.weak;
            theta[dims[k]] = coin(rng) ? mag : -mag;
        }
        const std::string qid = numbered("q", qi, 3);
        qids.push_back(qid);
        for (std::size_t j = 0; j < p; ++j) {
            qvals.push_back(static_cast<float>(theta[j] + spec.query_noise * normal(rng)));
        }
        for (std::size_t r = 0; r < spec.relevant_per_query; ++r) {
            const std::size_t slot = slots[qi * spec.relevant_per_query + r];
            for (std::size_t j = 0; j < p; ++j) {
                corpus[slot * p + j] = static_cast<float>(theta[j] + spec.doc_noise * normal(rng));
            }
            filled[slot] = true;
            f.qrels.set(qid, numbered("d", slot, 5), 1);
        }
    }
    for (std::size_t i = 0; i < spec.corpus; ++i) {
        if (!filled[i]) {
            for (std::size_t j = 0; j < p; ++j) {
                corpus[i * p + j] = static_cast<float>(normal(rng));
            }
        }
    }

    std::vector<std::string> dids;
    for (std::size_t i = 0; i < spec.corpus; ++i) {
        dids.push_back(numbered("d", i, 5));
    }
    f.queries = EmbeddingMatrix(std::move(qids), p, std::move(qvals));
    f.corpus = EmbeddingMatrix(std::move(dids), p, std::move(corpus));
    return f;
}

void write_fixture(const Fixture& f, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_embeddings(f.queries, dir / "queries.emb");
    save_embeddings(f.corpus, dir / "corpus.emb");
    std::ofstream q(dir / "qrels.txt");
    for (const auto& [qid, docs] : f.qrels.by_query()) {
        for (const auto& [doc, grade] : docs) {
            q << qid << " 0 " << doc << ' ' << grade << '\n';
        }
    }
}

}
