#include "rdime/significance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rdime {

namespace {

std::vector<double> differences(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("paired test needs samples of equal length (" + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()) + ")");
    }
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        d[i] = x[i] - y[i];
    }
    return d;
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            return h;
        }
    }
    return h;
}

double clamp_p(double p) {
    return std::clamp(p, 0.0, 1.0);
}

// Upper and lower tail probabilities from a CDF-like pair.
double tail_p(Alternative alt, double p_less_eq, double p_greater_eq) {
    switch (alt) {
    case Alternative::Greater:
        return clamp_p(p_greater_eq);
    case Alternative::Less:
        return clamp_p(p_less_eq);
    case Alternative::TwoSided:
        return clamp_p(2.0 * std::min(p_less_eq, p_greater_eq));
    }
    return 1.0;
}

}

std::string alternative_name(Alternative a) {
    switch (a) {
    case Alternative::TwoSided:
        return "two-sided";
    case Alternative::Greater:
        return "greater";
    case Alternative::Less:
        return "less";
    }
    return "two-sided";
}

Alternative parse_alternative(const std::string& text) {
    if (text == "two-sided") {
        return Alternative::TwoSided;
    }
    if (text == "greater") {
        return Alternative::Greater;
    }
    if (text == "less") {
        return Alternative::Less;
    }
    throw std::invalid_argument("unknown alternative '" + text + "' (expected two-sided, greater or less)");
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) {
        throw std::invalid_argument("incomplete beta needs a, b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("incomplete beta needs x in [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The continued fraction converges quickly for x < (a + 1) / (a + b + 2); use symmetry otherwise.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) {
        throw std::invalid_argument("Student t needs positive degrees of freedom");
    }
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

SigTestResult paired_t_test(std::span<const double> x, std::span<const double> y, Alternative alt) {
    const auto d = differences(x, y);
    const std::size_t n = d.size();
    if (n < 2) {
        throw std::invalid_argument("paired t-test needs at least 2 pairs");
    }
    SigTestResult r;
    r.test_name = "t-test";
    r.n = n;

    double mean = 0.0;
    for (double v : d) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    if (sd == 0.0) {
        r.degenerate = true;
        if (mean == 0.0) {
            r.statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.statistic = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            const bool agrees = alt == Alternative::TwoSided || (alt == Alternative::Greater) == (mean > 0);
            r.p_value = agrees ? 0.0 : 1.0;
        }
        return r;
    }

    r.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double df = static_cast<double>(n - 1);
    const double lower = student_t_cdf(r.statistic, df);
    const double upper = student_t_cdf(-r.statistic, df);
    r.p_value = tail_p(alt, lower, upper);
    return r;
}

SigTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, Alternative alt) {
    auto all = differences(x, y);
    std::vector<double> d;
    for (double v : all) {
        if (v != 0.0) {
            d.push_back(v);
        }
    }
    SigTestResult r;
    r.test_name = "wilcoxon";
    r.n = d.size();
    if (d.empty()) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }

    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

    // Ranks doubled so tied averages stay integral.
    std::vector<std::size_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) {
            ++j;
        }
        const std::size_t doubled = (i + 1) + (j + 1);
        for (std::size_t k = i; k <= j; ++k) {
            rank2[order[k]] = doubled;
        }
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    std::size_t w_plus2 = 0;
    std::size_t total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) {
            w_plus2 += rank2[i];
        }
    }
    const double w_plus = static_cast<double>(w_plus2) / 2.0;
    const double total = static_cast<double>(total2) / 2.0;
    r.statistic = w_plus - (total - w_plus);

    double p_le = 1.0;
    double p_ge = 1.0;
    if (n <= kWilcoxonExactMaxN) {
        // counts[s] = number of sign patterns whose doubled W+ equals s.
        std::vector<double> counts(total2 + 1, 0.0);
        counts[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = reach + 1; s-- > 0;) {
                if (counts[s] != 0.0) {
                    counts[s + rank2[i]] += counts[s];
                }
            }
            reach += rank2[i];
        }
        const double patterns = std::ldexp(1.0, static_cast<int>(n));
        double le = 0.0;
        double ge = 0.0;
        for (std::size_t s = 0; s <= total2; ++s) {
            if (s <= w_plus2) {
                le += counts[s];
            }
            if (s >= w_plus2) {
                ge += counts[s];
            }
        }
        p_le = le / patterns;
        p_ge = ge / patterns;
    } else {
        const double nn = static_cast<double>(n);
        const double mu = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double sigma = std::sqrt(var);
        p_ge = 1.0 - normal_cdf((w_plus - mu - 0.5) / sigma);
        p_le = normal_cdf((w_plus - mu + 0.5) / sigma);
    }
    r.p_value = tail_p(alt, p_le, p_ge);
    return r;
}

std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("Holm alpha must be in (0, 1)");
    }
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("p-values must lie in [0, 1]");
        }
    }
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::vector<bool> reject(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        if (p_values[order[i]] <= alpha / static_cast<double>(m - i)) {
            reject[order[i]] = true;
        } else {
            break;
        }
    }
    return reject;
}

double jarque_bera(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n == 0) {
        throw std::invalid_argument("Jarque-Bera of an empty sample");
    }
    double mean = 0.0;
    for (double v : sample) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double v : sample) {
        const double c = v - mean;
        const double c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (m2 == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    return static_cast<double>(n) / 6.0 * (skew * skew + (kurt - 3.0) * (kurt - 3.0) / 4.0);
}

double jarque_bera_critical() {
    return -2.0 * std::log(0.05);
}

std::string select_test(std::span<const double> diffs) {
    if (diffs.size() < kNormalityMinSamples) {
        return "wilcoxon";
    }
    return jarque_bera(diffs) < jarque_bera_critical() ? "t-test" : "wilcoxon";
}

SigTestResult paired_compare(std::span<const double> x, std::span<const double> y, const TestRouting& routing) {
    const auto d = differences(x, y);
    if (select_test(d) == "t-test") {
        return paired_t_test(x, y, routing.t_alternative);
    }
    return wilcoxon_signed_rank(x, y, routing.wilcoxon_alternative);
}

}
