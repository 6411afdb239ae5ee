#include "rdime/synthetic_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "rdime/parallel.hpp"

namespace rdime {

namespace {

// Per-dimension running mean and sum of squared deviations.
struct Moments {
    std::size_t count = 0;
    Vector mean;
    Vector m2;

    explicit Moments(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

    void add(std::span<const double> x) {
        ++count;
        const double n = static_cast<double>(count);
        for (std::size_t j = 0; j < mean.size(); ++j) {
            const double delta = x[j] - mean[j];
            mean[j] += delta / n;
            m2[j] += delta * (x[j] - mean[j]);
        }
    }

    void merge(const Moments& other) {
        if (other.count == 0) {
            return;
        }
        if (count == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(other.count);
        const double n = na + nb;
        for (std::size_t j = 0; j < mean.size(); ++j) {
            const double delta = other.mean[j] - mean[j];
            mean[j] += delta * nb / n;
            m2[j] += other.m2[j] + delta * delta * na * nb / n;
        }
        count += other.count;
    }

    Vector stderr_of_mean() const {
        Vector out(mean.size(), 0.0);
        if (count < 2) {
            return out;
        }
        const double n = static_cast<double>(count);
        for (std::size_t j = 0; j < mean.size(); ++j) {
            out[j] = std::sqrt(m2[j] / (n - 1.0)) / std::sqrt(n);
        }
        return out;
    }
};

// Runs `per_trial(draw, sink)` over all trials, chunked so the reduction order is fixed.
template <typename Sink, typename PerTrial>
std::vector<Sink> run_chunks(const NoiseModelParams& params, std::size_t trials, std::uint64_t seed,
                             std::size_t threads, const Sink& prototype, PerTrial per_trial) {
    const std::size_t chunks = (trials + kMcChunk - 1) / kMcChunk;
    std::vector<Sink> sinks(chunks, prototype);
    parallel_blocks(trials, kMcChunk, threads == 0 ? default_threads() : threads,
                    [&](std::size_t begin, std::size_t end) {
                        Sink& sink = sinks[begin / kMcChunk];
                        for (std::size_t t = begin; t < end; ++t) {
                            per_trial(gen_draw(params, trial_seed(seed, t)), sink);
                        }
                    });
    return sinks;
}

void check_trials(std::size_t trials) {
    if (trials == 0) {
        throw std::invalid_argument("Monte Carlo needs at least one trial");
    }
}

}

void NoiseModelParams::validate() const {
    if (theta.empty()) {
        throw std::invalid_argument("noise model needs a non-empty theta");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("noise model needs a finite epsilon >= 0");
    }
    if (sigmas.empty()) {
        throw std::invalid_argument("noise model needs at least one document sigma");
    }
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) {
            throw std::invalid_argument("document sigma " + std::to_string(i) + " must be finite and > 0");
        }
        if (i > 0 && sigmas[i] < sigmas[i - 1]) {
            throw std::invalid_argument("document sigmas must be non-decreasing");
        }
    }
    for (double t : theta) {
        if (!std::isfinite(t)) {
            throw std::invalid_argument("theta must be finite");
        }
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

SyntheticDraw gen_draw(const NoiseModelParams& params, std::uint64_t seed) {
    params.validate();
    const std::size_t p = params.dim();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticDraw d;
    d.seed = seed;
    d.z_query.resize(p);
    d.q.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        d.z_query[j] = normal(rng);
        d.q[j] = params.theta[j] + params.epsilon * d.z_query[j];
    }
    d.z_docs.assign(params.docs(), Vector(p));
    d.docs.assign(params.docs(), Vector(p));
    for (std::size_t i = 0; i < params.docs(); ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            d.z_docs[i][j] = normal(rng);
            d.docs[i][j] = params.theta[j] + params.sigmas[i] * d.z_docs[i][j];
        }
    }
    return d;
}

McReport mc_unbiasedness(const NoiseModelParams& params, std::size_t trials, std::uint64_t seed,
                         std::size_t threads) {
    params.validate();
    check_trials(trials);
    const auto weights = WeightVector::uniform(params.docs());
    const auto sinks = run_chunks(params, trials, seed, threads, Moments(params.dim()),
                                  [&](const SyntheticDraw& draw, Moments& m) {
                                      m.add(kernel_dime(draw.q, draw.docs, weights).scores);
                                  });
    Moments total(params.dim());
    for (const auto& s : sinks) {
        total.merge(s);
    }
    McReport r;
    r.trials = trials;
    r.per_dim_mean = total.mean;
    r.per_dim_stderr = total.stderr_of_mean();
    return r;
}

double mse_closed_form(double theta_j, double epsilon, std::span<const double> sigmas, const WeightVector& weights) {
    if (sigmas.size() != weights.size()) {
        throw std::invalid_argument("closed-form MSE: " + std::to_string(sigmas.size()) + " sigmas but " +
                                    std::to_string(weights.size()) + " weights");
    }
    double spread = 0.0;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        spread += sigmas[i] * sigmas[i] * weights[i] * weights[i];
    }
    const double t2 = theta_j * theta_j;
    const double e2 = epsilon * epsilon;
    return (t2 + e2) * spread + e2 * t2;
}

McReport mc_mse(const NoiseModelParams& params, const WeightVector& weights, std::size_t trials, std::uint64_t seed,
                std::size_t threads) {
    params.validate();
    check_trials(trials);
    if (weights.size() != params.docs()) {
        throw std::invalid_argument("mc_mse: " + std::to_string(weights.size()) + " weights for " +
                                    std::to_string(params.docs()) + " documents");
    }
    const std::size_t p = params.dim();
    Vector target(p);
    for (std::size_t j = 0; j < p; ++j) {
        target[j] = params.theta[j] * params.theta[j];
    }

    struct Pair {
        Moments estimate;
        Moments sq_error;
    };
    const auto sinks = run_chunks(params, trials, seed, threads, Pair{Moments(p), Moments(p)},
                                  [&](const SyntheticDraw& draw, Pair& acc) {
                                      const auto u = kernel_dime(draw.q, draw.docs, weights).scores;
                                      Vector err(p);
                                      for (std::size_t j = 0; j < p; ++j) {
                                          err[j] = (u[j] - target[j]) * (u[j] - target[j]);
                                      }
                                      acc.estimate.add(u);
                                      acc.sq_error.add(err);
                                  });
    Pair total{Moments(p), Moments(p)};
    for (const auto& s : sinks) {
        total.estimate.merge(s.estimate);
        total.sq_error.merge(s.sq_error);
    }

    McReport r;
    r.trials = trials;
    r.per_dim_mean = total.estimate.mean;
    r.per_dim_stderr = total.estimate.stderr_of_mean();
    r.empirical_mse = total.sq_error.mean;
    r.empirical_mse_stderr = total.sq_error.stderr_of_mean();
    r.closed_form_mse.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        r.closed_form_mse[j] = mse_closed_form(params.theta[j], params.epsilon, params.sigmas, weights);
    }
    return r;
}

Vector sparse_theta(std::size_t dim, std::size_t support_size, double magnitude) {
    if (support_size > dim) {
        throw std::invalid_argument("support size " + std::to_string(support_size) + " exceeds dimension " +
                                    std::to_string(dim));
    }
    Vector theta(dim, 0.0);
    for (std::size_t j = 0; j < support_size; ++j) {
        theta[j] = j % 2 == 0 ? magnitude : -magnitude;
    }
    return theta;
}

RecoveryStats recovery_experiment(const RecoveryConfig& config, const SelectorFn& selector, std::size_t threads) {
    check_trials(config.trials);
    NoiseModelParams params;
    params.theta = sparse_theta(config.dim, config.support_size, config.theta_magnitude);
    params.epsilon = config.epsilon;
    params.sigmas = config.sigmas;
    params.validate();

    const auto target_raw = oracle_indices(params.theta, params.epsilon);
    const auto target = oracle_select(params.theta, params.epsilon);
    const auto weights = WeightVector::uniform(params.docs());
    const SelectorFn select = selector ? selector : SelectorFn([](std::span<const double> q, const DimeScores& u) {
        return rdime_select(q, u);
    });

    struct Trial {
        double precision = 0.0;
        double recall = 0.0;
        double f1 = 0.0;
        bool exact = false;
    };
    std::vector<Trial> results(config.trials);
    parallel_blocks(config.trials, kMcChunk, threads == 0 ? default_threads() : threads,
                    [&](std::size_t begin, std::size_t end) {
                        for (std::size_t t = begin; t < end; ++t) {
                            const auto draw = gen_draw(params, trial_seed(config.seed, t));
                            const auto u = kernel_dime(draw.q, draw.docs, weights);
                            const auto chosen = select(draw.q, u);
                            const auto a = chosen.retained();
                            const auto b = target.retained();
                            std::size_t common = 0;
                            for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
                                if (a[i] == b[j]) {
                                    ++common;
                                    ++i;
                                    ++j;
                                } else if (a[i] < b[j]) {
                                    ++i;
                                } else {
                                    ++j;
                                }
                            }
                            Trial& r = results[t];
                            r.precision = static_cast<double>(common) / static_cast<double>(a.size());
                            r.recall = static_cast<double>(common) / static_cast<double>(b.size());
                            r.f1 = common == 0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
                            r.exact = std::equal(a.begin(), a.end(), b.begin(), b.end());
                        }
                    });

    RecoveryStats s;
    s.trials = config.trials;
    s.degenerate_trials = target_raw.empty() ? config.trials : 0;
    for (const auto& r : results) {
        s.mean_precision += r.precision;
        s.mean_recall += r.recall;
        s.mean_f1 += r.f1;
        s.exact_matches += r.exact ? 1 : 0;
        s.f1.push_back(r.f1);
    }
    const double n = static_cast<double>(config.trials);
    s.mean_precision /= n;
    s.mean_recall /= n;
    s.mean_f1 /= n;
    return s;
}

}
