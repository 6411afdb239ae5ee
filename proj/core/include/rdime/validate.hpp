#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

/**
 * @file validate.hpp
 *
 * @brief Self-checks of the estimators against brute-force and Monte Carlo oracles.
 *
 * Suites:
 *
 * - risk-optimal-set: the threshold set {theta_i^2 > eps^2} attains the brute-force
 *   minimum risk on random instances.
 * - unbiasedness: the uniform-weight estimator averages to theta^2 per dimension.
 * - mse: empirical MSE of fixed-weight estimators matches the closed form, and
 *   decreases with more feedback documents.
 * - optimal-weights: inverse-variance weights beat uniform weights on paired draws
 *   and minimize sum sigma_i^2 w_i^2 over the simplex.
 * - recovery: the estimated-noise threshold recovers the risk-optimal set when
 *   document noise is small next to query noise.
 *
 * Every suite writes one CSV into the output directory. Outputs are pure functions
 * of the seed.
 */

namespace rdime {

inline constexpr std::uint64_t kDefaultValidateSeed = 20240607;

struct ValidateOptions {
    std::uint64_t seed = kDefaultValidateSeed;
    std::filesystem::path out_dir = "validate_out";
    /// Test-only: negate the estimated noise variance before thresholding.
    bool flip_noise_sign = false;
    std::size_t threads = 0;
};

struct SuiteOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidateReport {
    std::vector<SuiteOutcome> suites;

    bool passed() const;
};

ValidateReport run_validate(const ValidateOptions& options);

}
