#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

/**
 * @file significance.hpp
 *
 * @brief Paired significance tests and Holm-Bonferroni step-down correction.
 *
 * All tests work on paired samples x and y through the differences x - y. The
 * alternative is stated in terms of x: `Greater` means H1 is x > y.
 */

namespace rdime {

enum class Alternative { TwoSided, Greater, Less };

std::string alternative_name(Alternative a);
Alternative parse_alternative(const std::string& text);

struct SigTestResult {
    std::string test_name;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    /// Zero-variance (t) or all-zero (Wilcoxon) differences; p follows the documented convention.
    bool degenerate = false;
    /// Set by the Holm step.
    bool corrected_reject = false;
};

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

double normal_cdf(double z);

/**
 * Paired Student t-test. t = mean(d) / (sd(d) / sqrt(n)) with the n - 1 sample sd.
 *
 * Zero-variance differences are degenerate: p = 1 when the mean difference is 0,
 * otherwise p = 0 if the sign agrees with the alternative and 1 if it does not.
 */
SigTestResult paired_t_test(std::span<const double> x, std::span<const double> y,
                            Alternative alt = Alternative::TwoSided);

/**
 * Wilcoxon signed-rank test. Zero differences are dropped; tied |d| get average ranks.
 *
 * The statistic is the signed rank sum W+ - W-. p is exact (counting all 2^n sign
 * patterns) for n <= 20 and otherwise uses the normal approximation with tie
 * and continuity corrections.
 */
SigTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                   Alternative alt = Alternative::Greater);

inline constexpr std::size_t kWilcoxonExactMaxN = 20;

/// Holm step-down decisions in input order: reject p_(i) while p_(i) <= alpha / (m - i + 1).
std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

/// n/6 (S^2 + (K - 3)^2 / 4) with moment-based skewness S and kurtosis K.
double jarque_bera(std::span<const double> sample);

/// chi-square(2) 0.95 quantile, -2 ln 0.05.
double jarque_bera_critical();

inline constexpr std::size_t kNormalityMinSamples = 8;

/// "t-test" when the Jarque-Bera statistic is below the critical value, else "wilcoxon".
/// Fewer than 8 samples, or zero variance, always route to "wilcoxon".
std::string select_test(std::span<const double> diffs);

struct TestRouting {
    Alternative t_alternative = Alternative::TwoSided;
    Alternative wilcoxon_alternative = Alternative::Greater;
};

/// Chooses the test with select_test on x - y and runs it.
SigTestResult paired_compare(std::span<const double> x, std::span<const double> y, const TestRouting& routing = {});

}
