#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

/**
 * @file dime.hpp
 *
 * @brief Dimension importance estimators.
 *
 * Every estimator produces a per-dimension score vector u_q. The single-document
 * form is u_q = q * d (element-wise); the kernel form replaces d by the weighted
 * centroid sum_i w_i d_i of M feedback documents, with w_i proportional to a
 * non-negative kernel K(q, d_i). Uniform weights give the pseudo-relevance
 * feedback estimator, softmax weights over q . d_i give the softmax-weighted
 * centroid estimator.
 *
 * All arithmetic is carried out in double precision.
 */

namespace rdime {

using Vector = std::vector<double>;
using DocumentSet = std::vector<Vector>;

namespace scheme {

struct Uniform {};

struct SoftmaxScores {
    double temperature = 1.0;
};

/// All weight on the first document.
struct SingleDoc {};

/// w_i proportional to 1 / sigma_i^2.
struct InverseVariance {
    std::vector<double> sigmas;
};

/// K = exp(-gamma ||q - d||^2).
struct Rbf {
    double gamma = 1.0;
};

/// K = max(tanh(a (q . d) + c), 1e-12).
struct Sigmoid {
    double a = 1.0;
    double c = 0.0;
};

}

using WeightScheme = std::variant<scheme::Uniform, scheme::SoftmaxScores, scheme::SingleDoc,
                                  scheme::InverseVariance, scheme::Rbf, scheme::Sigmoid>;

/// Throws std::invalid_argument if the scheme's parameters are out of range.
void validate_scheme(const WeightScheme& s);

/// Short name used in tags and configs: "uniform", "softmax", "single", "inverse-variance", "rbf", "sigmoid".
std::string scheme_name(const WeightScheme& s);

/// Floor applied to sigmoid kernel values so weights stay non-negative.
inline constexpr double kSigmoidFloor = 1e-12;

/**
 * @brief Normalized non-negative weights, one per feedback document.
 */
class WeightVector {
public:
    /// Validates non-negativity, finiteness and |sum - 1| <= 1e-12.
    explicit WeightVector(std::vector<double> weights);

    static WeightVector uniform(std::size_t m);

    std::span<const double> values() const noexcept { return weights_; }
    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }

private:
    std::vector<double> weights_;
};

struct DimeScores {
    std::string query_id;
    Vector scores;
    std::string estimator_tag;

    std::size_t dim() const noexcept { return scores.size(); }
};

DimeScores single_doc_dime(std::span<const double> q, std::span<const double> doc);

/// Softmax of scores / temperature, evaluated with the maximum subtracted.
std::vector<double> softmax(std::span<const double> scores, double temperature);

WeightVector kernel_weights(std::span<const double> q, const DocumentSet& docs, const WeightScheme& s);

DimeScores kernel_dime(std::span<const double> q, const DocumentSet& docs, const WeightVector& weights);

DimeScores swc_dime(std::span<const double> q, const DocumentSet& docs, double temperature = 1.0);

/// kernel_weights followed by kernel_dime, tagged with the scheme name.
DimeScores estimate(std::span<const double> q, const DocumentSet& docs, const WeightScheme& s);

Vector to_vector(std::span<const float> v);

double dot(std::span<const double> a, std::span<const double> b);

}
