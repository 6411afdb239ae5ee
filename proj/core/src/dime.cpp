#include "rdime/dime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdime {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
}

void check_docs(std::span<const double> q, const DocumentSet& docs, const char* what) {
    if (docs.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty document list");
    }
    for (const auto& d : docs) {
        check_same_length(q, d, what);
    }
}

std::vector<double> normalize(std::vector<double> k, const char* what) {
    double total = 0.0;
    for (double v : k) {
        total += v;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::invalid_argument(std::string(what) + ": kernel values cannot be normalized");
    }
    for (auto& v : k) {
        v /= total;
    }
    return k;
}

}

void validate_scheme(const WeightScheme& s) {
    std::visit(overloaded{
                   [](const scheme::SoftmaxScores& x) {
                       if (!(x.temperature > 0.0)) {
                           throw std::invalid_argument("softmax temperature must be positive");
                       }
                   },
                   [](const scheme::InverseVariance& x) {
                       for (double sigma : x.sigmas) {
                           if (!(sigma > 0.0) || !std::isfinite(sigma)) {
                               throw std::invalid_argument("inverse-variance sigmas must be positive");
                           }
                       }
                   },
                   [](const scheme::Rbf& x) {
                       if (!(x.gamma > 0.0)) {
                           throw std::invalid_argument("rbf gamma must be positive");
                       }
                   },
                   [](const auto&) {},
               },
               s);
}

std::string scheme_name(const WeightScheme& s) {
    return std::visit(overloaded{
                          [](const scheme::Uniform&) { return std::string("uniform"); },
                          [](const scheme::SoftmaxScores&) { return std::string("softmax"); },
                          [](const scheme::SingleDoc&) { return std::string("single"); },
                          [](const scheme::InverseVariance&) { return std::string("inverse-variance"); },
                          [](const scheme::Rbf&) { return std::string("rbf"); },
                          [](const scheme::Sigmoid&) { return std::string("sigmoid"); },
                      },
                      s);
}

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw std::invalid_argument("weight vector is empty");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("weights must be finite and non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("weights must sum to 1");
    }
}

WeightVector WeightVector::uniform(std::size_t m) {
    if (m == 0) {
        throw std::invalid_argument("weight vector is empty");
    }
    return WeightVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_same_length(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

Vector to_vector(std::span<const float> v) {
    return Vector(v.begin(), v.end());
}

DimeScores single_doc_dime(std::span<const double> q, std::span<const double> doc) {
    check_same_length(q, doc, "single_doc_dime");
    DimeScores out;
    out.estimator_tag = "single";
    out.scores.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        out.scores[i] = q[i] * doc[i];
    }
    return out;
}

std::vector<double> softmax(std::span<const double> scores, double temperature) {
    if (scores.empty()) {
        throw std::invalid_argument("softmax of an empty score vector");
    }
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("softmax temperature must be positive");
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp((scores[i] - top) / temperature);
    }
    return normalize(std::move(out), "softmax");
}

WeightVector kernel_weights(std::span<const double> q, const DocumentSet& docs, const WeightScheme& s) {
    check_docs(q, docs, "kernel_weights");
    validate_scheme(s);
    const std::size_t m = docs.size();

    auto weights = std::visit(
        overloaded{
            [&](const scheme::Uniform&) { return std::vector<double>(m, 1.0 / static_cast<double>(m)); },
            [&](const scheme::SoftmaxScores& x) {
                std::vector<double> scores(m);
                for (std::size_t i = 0; i < m; ++i) {
                    scores[i] = dot(q, docs[i]);
                }
                return softmax(scores, x.temperature);
            },
            [&](const scheme::SingleDoc&) {
                std::vector<double> w(m, 0.0);
                w[0] = 1.0;
                return w;
            },
            [&](const scheme::InverseVariance& x) {
                if (x.sigmas.size() != m) {
                    throw std::invalid_argument("inverse-variance scheme has " + std::to_string(x.sigmas.size()) +
                                                " sigmas for " + std::to_string(m) + " documents");
                }
                std::vector<double> k(m);
                for (std::size_t i = 0; i < m; ++i) {
                    k[i] = 1.0 / (x.sigmas[i] * x.sigmas[i]);
                }
                return normalize(std::move(k), "inverse-variance");
            },
            [&](const scheme::Rbf& x) {
                // Subtracting the smallest distance leaves the normalized weights unchanged and avoids underflow.
                std::vector<double> dist(m);
                for (std::size_t i = 0; i < m; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < q.size(); ++j) {
                        const double diff = q[j] - docs[i][j];
                        acc += diff * diff;
                    }
                    dist[i] = acc;
                }
                const double nearest = *std::min_element(dist.begin(), dist.end());
                std::vector<double> k(m);
                for (std::size_t i = 0; i < m; ++i) {
                    k[i] = std::exp(-x.gamma * (dist[i] - nearest));
                }
                return normalize(std::move(k), "rbf");
            },
            [&](const scheme::Sigmoid& x) {
                std::vector<double> k(m);
                for (std::size_t i = 0; i < m; ++i) {
                    k[i] = std::max(std::tanh(x.a * dot(q, docs[i]) + x.c), kSigmoidFloor);
                }
                return normalize(std::move(k), "sigmoid");
            },
        },
        s);
    return WeightVector(std::move(weights));
}

DimeScores kernel_dime(std::span<const double> q, const DocumentSet& docs, const WeightVector& weights) {
    check_docs(q, docs, "kernel_dime");
    if (weights.size() != docs.size()) {
        throw std::invalid_argument("kernel_dime: " + std::to_string(weights.size()) + " weights for " +
                                    std::to_string(docs.size()) + " documents");
    }
    DimeScores out;
    out.estimator_tag = "kernel";
    out.scores.assign(q.size(), 0.0);
    for (std::size_t j = 0; j < q.size(); ++j) {
        double centroid = 0.0;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            centroid += weights[i] * docs[i][j];
        }
        out.scores[j] = q[j] * centroid;
    }
    return out;
}

DimeScores swc_dime(std::span<const double> q, const DocumentSet& docs, double temperature) {
    auto out = kernel_dime(q, docs, kernel_weights(q, docs, scheme::SoftmaxScores{temperature}));
    out.estimator_tag = "softmax";
    return out;
}

DimeScores estimate(std::span<const double> q, const DocumentSet& docs, const WeightScheme& s) {
    auto out = kernel_dime(q, docs, kernel_weights(q, docs, s));
    out.estimator_tag = scheme_name(s);
    return out;
}

}
