#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rdime/dime.hpp"

using namespace rdime;

namespace {

DocumentSet random_docs(std::mt19937_64& rng, std::size_t m, std::size_t p) {
    std::normal_distribution<double> n(0.0, 1.0);
    DocumentSet docs(m, Vector(p));
    for (auto& d : docs) {
        for (auto& v : d) {
            v = n(rng);
        }
    }
    return docs;
}

Vector random_vector(std::mt19937_64& rng, std::size_t p) {
    return random_docs(rng, 1, p).front();
}

double sum_of(std::span<const double> w) {
    double s = 0.0;
    for (double v : w) {
        s += v;
    }
    return s;
}

}

TEST(SingleDocDime, ElementwiseProduct) {
    EXPECT_EQ(single_doc_dime(Vector{1, 2}, Vector{3, -1}).scores, (Vector{3, -2}));
    EXPECT_EQ(single_doc_dime(Vector{1, 2, 3}, Vector{0, 0, 0}).scores, (Vector{0, 0, 0}));
    EXPECT_EQ(single_doc_dime(Vector{1, 0, 0}, Vector{1, 0, 0}).scores, (Vector{1, 0, 0}));
    EXPECT_EQ(single_doc_dime(Vector{1, 0}, Vector{1, 0}).estimator_tag, "single");
}

TEST(SingleDocDime, LengthMismatchThrows) {
    EXPECT_THROW(single_doc_dime(Vector{1, 2}, Vector{1}), std::invalid_argument);
}

TEST(KernelWeights, Uniform) {
    const auto w = kernel_weights(Vector{1, 0}, DocumentSet(4, Vector{0, 1}), scheme::Uniform{});
    for (double v : w.values()) {
        EXPECT_DOUBLE_EQ(v, 0.25);
    }
}

TEST(KernelWeights, SoftmaxHandExample) {
    const auto w = kernel_weights(Vector{1, 0}, DocumentSet{{1, 0}, {0, 1}}, scheme::SoftmaxScores{1.0});
    const double e = std::exp(1.0);
    EXPECT_NEAR(w[0], e / (e + 1.0), 1e-15);
    EXPECT_NEAR(w[0], 0.73106, 1e-5);
    EXPECT_NEAR(w[1], 0.26894, 1e-5);
}

TEST(KernelWeights, InverseVariance) {
    const auto w = kernel_weights(Vector{1}, DocumentSet{{1}, {1}}, scheme::InverseVariance{{1.0, 2.0}});
    EXPECT_NEAR(w[0], 0.8, 1e-15);
    EXPECT_NEAR(w[1], 0.2, 1e-15);
    EXPECT_THROW(kernel_weights(Vector{1}, DocumentSet{{1}}, scheme::InverseVariance{{1.0, 2.0}}),
                 std::invalid_argument);
}

TEST(KernelWeights, SingleDocPutsAllWeightFirst) {
    const auto w = kernel_weights(Vector{1}, DocumentSet{{1}, {2}, {3}}, scheme::SingleDoc{});
    EXPECT_EQ(w[0], 1.0);
    EXPECT_EQ(w[1], 0.0);
}

TEST(KernelWeights, RbfAndSigmoidMatchDirectFormulas) {
    const Vector q{0.5, -1.0};
    const DocumentSet docs{{0.0, -1.0}, {1.0, 1.0}, {2.0, 0.0}};
    const double gamma = 0.7;
    std::vector<double> k;
    for (const auto& d : docs) {
        double dist = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            dist += (q[j] - d[j]) * (q[j] - d[j]);
        }
        k.push_back(std::exp(-gamma * dist));
    }
    const auto w = kernel_weights(q, docs, scheme::Rbf{gamma});
    for (std::size_t i = 0; i < k.size(); ++i) {
        EXPECT_NEAR(w[i], k[i] / (k[0] + k[1] + k[2]), 1e-14);
    }

    std::vector<double> s;
    for (const auto& d : docs) {
        s.push_back(std::max(std::tanh(2.0 * dot(q, d) + 0.1), kSigmoidFloor));
    }
    const auto ws = kernel_weights(q, docs, scheme::Sigmoid{2.0, 0.1});
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(ws[i], s[i] / (s[0] + s[1] + s[2]), 1e-14);
    }
}

TEST(KernelWeights, SigmoidFloorsNegativeKernels) {
    // Both kernels negative: floored to the same value, hence uniform.
    const auto w = kernel_weights(Vector{1}, DocumentSet{{-1}, {-2}}, scheme::Sigmoid{1.0, 0.0});
    EXPECT_NEAR(w[0], 0.5, 1e-12);
    for (double v : w.values()) {
        EXPECT_GE(v, 0.0);
    }
}

TEST(KernelWeights, RbfFarDocumentsDoNotUnderflow) {
    const auto w = kernel_weights(Vector{0}, DocumentSet{{1000}, {1001}}, scheme::Rbf{1.0});
    EXPECT_NEAR(sum_of(w.values()), 1.0, 1e-12);
    EXPECT_GT(w[0], w[1]);
}

TEST(KernelWeights, InvalidInputs) {
    EXPECT_THROW(kernel_weights(Vector{1}, DocumentSet{}, scheme::Uniform{}), std::invalid_argument);
    EXPECT_THROW(kernel_weights(Vector{1}, DocumentSet{{1, 2}}, scheme::Uniform{}), std::invalid_argument);
    EXPECT_THROW(validate_scheme(scheme::SoftmaxScores{0.0}), std::invalid_argument);
    EXPECT_THROW(validate_scheme(scheme::Rbf{-1.0}), std::invalid_argument);
    EXPECT_THROW(validate_scheme(scheme::InverseVariance{{1.0, 0.0}}), std::invalid_argument);
}

TEST(KernelWeights, AlwaysNormalizedAndNonNegative) {
    std::mt19937_64 rng(99);
    const std::vector<WeightScheme> schemes = {scheme::Uniform{},       scheme::SoftmaxScores{0.5},
                                               scheme::SingleDoc{},     scheme::InverseVariance{{0.5, 1.0, 3.0}},
                                               scheme::Rbf{0.3},        scheme::Sigmoid{0.2, -0.5}};
    for (int t = 0; t < 200; ++t) {
        const auto q = random_vector(rng, 8);
        const auto docs = random_docs(rng, 3, 8);
        for (const auto& s : schemes) {
            const auto w = kernel_weights(q, docs, s);
            EXPECT_NEAR(sum_of(w.values()), 1.0, 1e-12);
            for (double v : w.values()) {
                EXPECT_GE(v, 0.0);
            }
        }
    }
}

TEST(Softmax, ShiftInvariant) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(5);
        for (auto& v : s) {
            v = n(rng);
        }
        auto shifted = s;
        const double c = n(rng) * 100.0;
        for (auto& v : shifted) {
            v += c;
        }
        const auto a = softmax(s, 1.3);
        const auto b = softmax(shifted, 1.3);
        for (std::size_t i = 0; i < s.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-12);
        }
    }
}

TEST(WeightVector, RejectsInvalid) {
    EXPECT_THROW(WeightVector({0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW(WeightVector({1.5, -0.5}), std::invalid_argument);
    EXPECT_NO_THROW(WeightVector({0.25, 0.75}));
}

TEST(KernelDime, HandExamples) {
    EXPECT_EQ(kernel_dime(Vector{1, 1}, DocumentSet{{2, 0}, {0, 2}}, WeightVector::uniform(2)).scores, (Vector{1, 1}));

    const auto w = kernel_weights(Vector{1, 0}, DocumentSet{{1, 0}, {0, 1}}, scheme::SoftmaxScores{1.0});
    const auto u = kernel_dime(Vector{1, 0}, DocumentSet{{1, 0}, {0, 1}}, w);
    EXPECT_NEAR(u.scores[0], 0.73106, 1e-5);
    EXPECT_EQ(u.scores[1], 0.0);
}

TEST(KernelDime, SingleDocWithUnitWeightMatchesSingleDoc) {
    const Vector q{0.3, -1.2, 2.5};
    const Vector d{1.1, 0.4, -0.7};
    EXPECT_EQ(kernel_dime(q, DocumentSet{d}, WeightVector({1.0})).scores, single_doc_dime(q, d).scores);
}

TEST(KernelDime, UniformEqualsQueryTimesCentroid) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const auto q = random_vector(rng, 16);
        const auto docs = random_docs(rng, 4, 16);
        const auto u = kernel_dime(q, docs, WeightVector::uniform(4));
        for (std::size_t j = 0; j < 16; ++j) {
            double c = 0.0;
            for (const auto& d : docs) {
                c += d[j];
            }
            EXPECT_NEAR(u.scores[j], q[j] * (c / 4.0), 1e-14 * (1.0 + std::abs(q[j] * c)));
        }
    }
}

TEST(KernelDime, LinearInEachDocument) {
    std::mt19937_64 rng(8);
    const auto q = random_vector(rng, 6);
    auto docs = random_docs(rng, 3, 6);
    const WeightVector w({0.2, 0.5, 0.3});
    const auto before = kernel_dime(q, docs, w).scores;
    const auto d1 = docs[1];
    for (auto& v : docs[1]) {
        v *= 2.0;
    }
    const auto after = kernel_dime(q, docs, w).scores;
    for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_NEAR(after[j] - before[j], 0.5 * q[j] * d1[j], 1e-12);
    }
}

TEST(KernelDime, MismatchesThrow) {
    EXPECT_THROW(kernel_dime(Vector{1, 2}, DocumentSet{{1, 2}}, WeightVector::uniform(2)), std::invalid_argument);
    EXPECT_THROW(kernel_dime(Vector{1, 2}, DocumentSet{{1}}, WeightVector::uniform(1)), std::invalid_argument);
}

TEST(SwcDime, MatchesTwoStepPath) {
    std::mt19937_64 rng(11);
    const auto q = random_vector(rng, 10);
    const auto docs = random_docs(rng, 5, 10);
    const auto a = swc_dime(q, docs, 0.8);
    const auto b = kernel_dime(q, docs, kernel_weights(q, docs, scheme::SoftmaxScores{0.8}));
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.estimator_tag, "softmax");
}

TEST(SwcDime, IdenticalDocsGiveSingleDocResult) {
    const Vector q{1.0, -2.0, 0.5};
    const Vector d{0.3, 0.7, -1.0};
    for (double t : {0.01, 1.0, 100.0}) {
        const auto u = swc_dime(q, DocumentSet(3, d), t);
        const auto ref = single_doc_dime(q, d);
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(u.scores[j], ref.scores[j], 1e-15);
        }
    }
}

TEST(SwcDime, LargeTemperatureApproachesUniform) {
    std::mt19937_64 rng(13);
    const auto q = random_vector(rng, 12);
    const auto docs = random_docs(rng, 4, 12);
    const auto a = swc_dime(q, docs, 1e9);
    const auto b = kernel_dime(q, docs, WeightVector::uniform(4));
    for (std::size_t j = 0; j < 12; ++j) {
        EXPECT_NEAR(a.scores[j], b.scores[j], 1e-6);
    }
}

TEST(InverseVarianceWeights, MinimizeSpreadOverSimplex) {
    const std::vector<double> sigmas{1.0, 2.0, 4.0};
    const auto opt = kernel_weights(Vector{0}, DocumentSet(3, Vector{0}), scheme::InverseVariance{sigmas});
    auto spread = [&](std::span<const double> w) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            s += sigmas[i] * sigmas[i] * w[i] * w[i];
        }
        return s;
    };
    const double best = spread(opt.values());
    std::mt19937_64 rng(17);
    std::exponential_distribution<double> e(1.0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> w{e(rng), e(rng), e(rng)};
        const double total = w[0] + w[1] + w[2];
        for (auto& v : w) {
            v /= total;
        }
        EXPECT_LE(best, spread(w));
    }
}

TEST(Estimate, TagsWithSchemeName) {
    const auto u = estimate(Vector{1, 2}, DocumentSet{{1, 1}, {2, 2}}, scheme::Uniform{});
    EXPECT_EQ(u.estimator_tag, "uniform");
    EXPECT_EQ(u.scores, (Vector{1.5, 3.0}));
    EXPECT_EQ(scheme_name(scheme::Rbf{}), "rbf");
    EXPECT_EQ(scheme_name(scheme::InverseVariance{}), "inverse-variance");
}
