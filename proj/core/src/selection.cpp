#include "rdime/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace rdime {

namespace {

std::vector<std::size_t> all_indices(std::size_t dim) {
    std::vector<std::size_t> out(dim);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

SelectionMask with_fallback(std::size_t dim, std::vector<std::size_t> retained, const std::string& tag) {
    if (retained.empty()) {
        return SelectionMask::full(dim, tag + "-fallback");
    }
    return SelectionMask(dim, std::move(retained), tag);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}

SelectionMask::SelectionMask(std::size_t dim, std::vector<std::size_t> retained, std::string policy_tag)
    : dim_(dim), retained_(std::move(retained)), tag_(std::move(policy_tag)) {
    if (dim_ == 0) {
        throw std::invalid_argument("selection mask dimension must be positive");
    }
    if (retained_.empty()) {
        throw std::invalid_argument("selection mask must retain at least one dimension");
    }
    for (std::size_t i = 0; i < retained_.size(); ++i) {
        if (retained_[i] >= dim_ || (i > 0 && retained_[i] <= retained_[i - 1])) {
            throw std::invalid_argument("selection mask indices must be strictly increasing and below " +
                                        std::to_string(dim_));
        }
    }
}

SelectionMask SelectionMask::full(std::size_t dim, std::string policy_tag) {
    return SelectionMask(dim, all_indices(dim), std::move(policy_tag));
}

SelectionPolicy parse_policy(const std::string& text) {
    if (text == "baseline") {
        return policy::Baseline{};
    }
    if (text == "rdime") {
        return policy::RDime{};
    }
    if (text == "oracle") {
        return policy::Oracle{};
    }
    for (const auto& [prefix, absolute] : {std::pair{std::string("topk:"), false}, {std::string("topk-abs:"), true}}) {
        if (text.rfind(prefix, 0) == 0) {
            const std::string number = text.substr(prefix.size());
            char* end = nullptr;
            const double k = std::strtod(number.c_str(), &end);
            if (number.empty() || end != number.c_str() + number.size() || !(k > 0.0 && k <= 1.0)) {
                throw std::invalid_argument("top-k fraction must be in (0, 1]: '" + text + "'");
            }
            return policy::TopKFraction{k, absolute};
        }
    }
    throw std::invalid_argument("unknown selection policy '" + text + "'");
}

std::string policy_name(const SelectionPolicy& p) {
    return std::visit(overloaded{
                          [](const policy::Baseline&) { return std::string("baseline"); },
                          [](const policy::RDime&) { return std::string("rdime"); },
                          [](const policy::Oracle&) { return std::string("oracle"); },
                          [](const policy::TopKFraction& t) {
                              char buf[32];
                              std::snprintf(buf, sizeof(buf), "%.6g", t.k);
                              return std::string(t.by_absolute ? "topk-abs:" : "topk:") + buf;
                          },
                      },
                      p);
}

std::size_t topk_count(double k, std::size_t dim) {
    if (!(k > 0.0 && k <= 1.0)) {
        throw std::invalid_argument("top-k fraction must be in (0, 1]");
    }
    // The slack keeps decimal fractions such as 0.29 * 100 from rounding down a whole step.
    const auto m = static_cast<std::size_t>(std::floor(k * static_cast<double>(dim) + 1e-9));
    return std::clamp<std::size_t>(m, 1, dim);
}

SelectionMask topk_select(const DimeScores& u, double k, bool by_absolute) {
    const std::size_t p = u.dim();
    if (p == 0) {
        throw std::invalid_argument("top-k selection on empty scores");
    }
    const std::size_t m = topk_count(k, p);
    auto order = all_indices(p);
    auto key = [&](std::size_t i) { return by_absolute ? std::abs(u.scores[i]) : u.scores[i]; };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double ka = key(a);
                          const double kb = key(b);
                          return ka > kb || (ka == kb && a < b);
                      });
    order.resize(m);
    std::sort(order.begin(), order.end());
    return SelectionMask(p, std::move(order), by_absolute ? "topk-abs" : "topk");
}

NoiseEstimate estimate_noise(std::span<const double> q, const DimeScores& u) {
    if (q.size() != u.dim()) {
        throw std::invalid_argument("estimate_noise: query has " + std::to_string(q.size()) + " dims, scores have " +
                                    std::to_string(u.dim()));
    }
    if (q.empty()) {
        throw std::invalid_argument("estimate_noise on empty vectors");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        acc += q[i] * q[i] - u.scores[i];
    }
    NoiseEstimate est;
    est.epsilon_sq_raw = acc / static_cast<double>(q.size());
    est.epsilon_sq_clamped = std::max(est.epsilon_sq_raw, 0.0);
    return est;
}

std::vector<std::size_t> threshold_indices(const DimeScores& u, double threshold) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < u.dim(); ++i) {
        if (u.scores[i] > threshold) {
            out.push_back(i);
        }
    }
    return out;
}

SelectionMask rdime_select(std::span<const double> q, const DimeScores& u) {
    const auto noise = estimate_noise(q, u);
    return with_fallback(u.dim(), threshold_indices(u, noise.epsilon_sq_clamped), "rdime");
}

std::vector<std::size_t> oracle_indices(std::span<const double> theta, double epsilon) {
    if (!(epsilon >= 0.0)) {
        throw std::invalid_argument("oracle selection needs epsilon >= 0");
    }
    const double eps_sq = epsilon * epsilon;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (theta[i] * theta[i] > eps_sq) {
            out.push_back(i);
        }
    }
    return out;
}

SelectionMask oracle_select(std::span<const double> theta, double epsilon) {
    if (theta.empty()) {
        throw std::invalid_argument("oracle selection on empty signal");
    }
    return with_fallback(theta.size(), oracle_indices(theta, epsilon), "oracle");
}

double risk(std::span<const std::size_t> retained, std::span<const double> theta, double epsilon) {
    const double eps_sq = epsilon * epsilon;
    double acc = 0.0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (next < retained.size() && retained[next] == i) {
            acc += eps_sq;
            ++next;
        } else {
            acc += theta[i] * theta[i];
        }
    }
    if (next != retained.size()) {
        throw std::invalid_argument("risk: retained indices must be strictly increasing and below " +
                                    std::to_string(theta.size()));
    }
    return acc;
}

double risk(const SelectionMask& mask, std::span<const double> theta, double epsilon) {
    if (mask.dim() != theta.size()) {
        throw std::invalid_argument("risk: mask has " + std::to_string(mask.dim()) + " dims, theta has " +
                                    std::to_string(theta.size()));
    }
    return risk(mask.retained(), theta, epsilon);
}

SubsetOptimum brute_force_optimal(std::span<const double> theta, double epsilon) {
    const std::size_t p = theta.size();
    if (p > kBruteForceMaxDim) {
        throw std::invalid_argument("brute_force_optimal enumerates 2^p subsets; p = " + std::to_string(p) +
                                    " exceeds " + std::to_string(kBruteForceMaxDim));
    }
    if (!(epsilon >= 0.0)) {
        throw std::invalid_argument("brute_force_optimal needs epsilon >= 0");
    }
    const double eps_sq = epsilon * epsilon;
    const std::uint32_t subsets = std::uint32_t{1} << p;

    double best = 0.0;
    std::uint32_t best_bits = 0;
    for (std::uint32_t bits = 0; bits < subsets; ++bits) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            acc += ((bits >> i) & 1u) ? eps_sq : theta[i] * theta[i];
        }
        if (bits == 0 || acc < best) {
            best = acc;
            best_bits = bits;
        }
    }

    std::uint32_t canonical = 0;
    for (std::size_t i = 0; i < p; ++i) {
        if (theta[i] * theta[i] > eps_sq) {
            canonical |= std::uint32_t{1} << i;
        }
    }

    SubsetOptimum out;
    out.min_risk = best;
    std::vector<std::size_t> canonical_set;
    for (std::size_t i = 0; i < p; ++i) {
        if ((canonical >> i) & 1u) {
            canonical_set.push_back(i);
        }
    }
    if (risk(canonical_set, theta, epsilon) == best) {
        best_bits = canonical;
    }
    for (std::size_t i = 0; i < p; ++i) {
        if ((best_bits >> i) & 1u) {
            out.indices.push_back(i);
        }
    }
    return out;
}

SelectionMask apply_policy(const SelectionPolicy& p, std::span<const double> q, const DimeScores& u) {
    return std::visit(overloaded{
                          [&](const policy::Baseline&) { return SelectionMask::full(u.dim(), "baseline"); },
                          [&](const policy::TopKFraction& t) { return topk_select(u, t.k, t.by_absolute); },
                          [&](const policy::RDime&) { return rdime_select(q, u); },
                          [&](const policy::Oracle&) -> SelectionMask {
                              throw std::invalid_argument("oracle policy needs the latent signal; use oracle_select");
                          },
                      },
                      p);
}

}
