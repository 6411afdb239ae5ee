#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "rdime/dime.hpp"
#include "rdime/selection.hpp"

/**
 * @file synthetic_lab.hpp
 *
 * @brief Monte Carlo harness for the Gaussian query/document model.
 *
 * A latent signal theta is observed through a noisy query q = theta + eps z and
 * M feedback documents d_i = theta + sigma_i z_i, all noise vectors i.i.d.
 * standard normal. Every trial draws from its own seed, derived from a master
 * seed and the trial index, and trials are reduced in fixed chunks merged in
 * chunk order. Results therefore depend only on (params, seed, trials).
 */

namespace rdime {

struct NoiseModelParams {
    Vector theta;
    double epsilon = 0.0;
    /// One per document, strictly positive and non-decreasing.
    std::vector<double> sigmas;

    /// Throws std::invalid_argument if an invariant is broken.
    void validate() const;
    std::size_t dim() const noexcept { return theta.size(); }
    std::size_t docs() const noexcept { return sigmas.size(); }
};

struct SyntheticDraw {
    Vector q;
    DocumentSet docs;
    Vector z_query;
    DocumentSet z_docs;
    std::uint64_t seed = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of trial `index` under `master`; independent of execution order.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index);

/// The query noise is drawn first, then each document's noise in order.
SyntheticDraw gen_draw(const NoiseModelParams& params, std::uint64_t seed);

struct McReport {
    std::size_t trials = 0;
    Vector per_dim_mean;
    /// Sample sd over trials divided by sqrt(trials).
    Vector per_dim_stderr;
    /// Mean of (u_j - theta_j^2)^2; empty for unbiasedness runs.
    Vector empirical_mse;
    Vector empirical_mse_stderr;
    Vector closed_form_mse;
};

/// Trials per reduction chunk.
inline constexpr std::size_t kMcChunk = 1024;

/// Per-dimension mean of the uniform-weight estimator u = q * mean(d_i) over `trials` draws.
McReport mc_unbiasedness(const NoiseModelParams& params, std::size_t trials, std::uint64_t seed,
                         std::size_t threads = 0);

/// (theta_j^2 + eps^2) sum_i sigma_i^2 w_i^2 + eps^2 theta_j^2 for fixed weights.
double mse_closed_form(double theta_j, double epsilon, std::span<const double> sigmas, const WeightVector& weights);

/// Empirical per-dimension MSE of u = q * sum_i w_i d_i against theta^2. The same seed
/// gives the same noise draws whatever the weights, so two calls form a paired comparison.
McReport mc_mse(const NoiseModelParams& params, const WeightVector& weights, std::size_t trials, std::uint64_t seed,
                std::size_t threads = 0);

struct RecoveryConfig {
    std::size_t dim = 64;
    std::size_t support_size = 16;
    double theta_magnitude = 1.0;
    double epsilon = 1e-3;
    /// One per feedback document.
    std::vector<double> sigmas;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
};

struct RecoveryStats {
    std::size_t trials = 0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f1 = 0.0;
    std::size_t exact_matches = 0;
    /// Trials whose target set fell back to all dimensions.
    std::size_t degenerate_trials = 0;
    std::vector<double> f1;
};

/// Selection rule under test; receives the query and its uniform-weight scores.
using SelectorFn = std::function<SelectionMask(std::span<const double>, const DimeScores&)>;

/// The signal is theta_magnitude with alternating sign on the first `support_size` dims, 0 elsewhere.
Vector sparse_theta(std::size_t dim, std::size_t support_size, double magnitude);

/// Compares the selector's set with oracle_select(theta, eps) on each draw. Defaults to rdime_select.
RecoveryStats recovery_experiment(const RecoveryConfig& config, const SelectorFn& selector = {},
                                  std::size_t threads = 0);

}
