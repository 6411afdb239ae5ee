#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rdime/dime.hpp"

/**
 * @file selection.hpp
 *
 * @brief Turning importance scores into per-query sets of retained dimensions.
 *
 * Three families are provided:
 *
 * - `topk_select` keeps a fixed fraction k of the highest-scoring dimensions.
 * - `rdime_select` keeps every dimension whose score exceeds the estimated
 *   query noise variance, eps^2 ~ (1/p) sum_i (q_i^2 - u_i).
 * - `oracle_select` is the risk-optimal set {i : theta_i^2 > eps^2} when the
 *   latent signal theta and the noise scale eps are known. Under the Gaussian
 *   query model q = theta + eps z, keeping dimension i costs eps^2 in expected
 *   squared error and dropping it costs theta_i^2, see `risk`.
 *
 * A mask never comes back empty: when a rule selects nothing, every dimension is
 * retained and the tag gets a "-fallback" suffix.
 */

namespace rdime {

class SelectionMask {
public:
    /// `retained` must be strictly increasing, in range and non-empty.
    SelectionMask(std::size_t dim, std::vector<std::size_t> retained, std::string policy_tag);

    static SelectionMask full(std::size_t dim, std::string policy_tag);

    std::size_t dim() const noexcept { return dim_; }
    std::span<const std::size_t> retained() const noexcept { return retained_; }
    std::size_t size() const noexcept { return retained_.size(); }
    const std::string& policy_tag() const noexcept { return tag_; }

    bool is_full() const noexcept { return retained_.size() == dim_; }
    double fraction() const noexcept { return static_cast<double>(retained_.size()) / static_cast<double>(dim_); }

    bool operator==(const SelectionMask&) const = default;

private:
    std::size_t dim_;
    std::vector<std::size_t> retained_;
    std::string tag_;
};

struct NoiseEstimate {
    double epsilon_sq_raw = 0.0;
    double epsilon_sq_clamped = 0.0;
};

namespace policy {

/// Full dimensionality.
struct Baseline {};

struct TopKFraction {
    double k = 1.0;
    /// Rank by |u| instead of u.
    bool by_absolute = false;
};

struct RDime {};

/// Needs the latent signal, so only usable in the synthetic lab.
struct Oracle {};

}

using SelectionPolicy = std::variant<policy::Baseline, policy::TopKFraction, policy::RDime, policy::Oracle>;

/// Parses "baseline", "topk:<k>", "topk-abs:<k>", "rdime" or "oracle".
SelectionPolicy parse_policy(const std::string& text);

/// Inverse of parse_policy; topk fractions print with up to 6 significant digits.
std::string policy_name(const SelectionPolicy& p);

/// Number of dimensions Top-k keeps: max(1, floor(k * p)).
std::size_t topk_count(double k, std::size_t dim);

/// Ties are broken towards the lower index.
SelectionMask topk_select(const DimeScores& u, double k, bool by_absolute = false);

NoiseEstimate estimate_noise(std::span<const double> q, const DimeScores& u);

/// {i : u_i > threshold}, possibly empty.
std::vector<std::size_t> threshold_indices(const DimeScores& u, double threshold);

SelectionMask rdime_select(std::span<const double> q, const DimeScores& u);

/// {i : theta_i^2 > epsilon^2}, possibly empty.
std::vector<std::size_t> oracle_indices(std::span<const double> theta, double epsilon);

SelectionMask oracle_select(std::span<const double> theta, double epsilon);

/**
 * Expected squared error of hard thresholding on `retained`: |S| eps^2 + sum_{i not in S} theta_i^2.
 *
 * Terms are accumulated in index order, so two index sets sharing a prefix
 * produce bit-identical partial sums.
 */
double risk(std::span<const std::size_t> retained, std::span<const double> theta, double epsilon);
double risk(const SelectionMask& mask, std::span<const double> theta, double epsilon);

struct SubsetOptimum {
    std::vector<std::size_t> indices;
    double min_risk = 0.0;
};

inline constexpr std::size_t kBruteForceMaxDim = 20;

/**
 * Exhaustive minimum of `risk` over all 2^p subsets (p <= 20).
 *
 * Among minimizers the set {i : theta_i^2 > eps^2} is returned when it attains the
 * minimum; otherwise the first minimizer in enumeration order.
 */
SubsetOptimum brute_force_optimal(std::span<const double> theta, double epsilon);

/// Applies any policy except Oracle, which throws.
SelectionMask apply_policy(const SelectionPolicy& p, std::span<const double> q, const DimeScores& u);

}
