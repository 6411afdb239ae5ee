#include "rdime/validate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rdime/csv.hpp"
#include "rdime/embedding_store.hpp"
#include "rdime/selection.hpp"
#include "rdime/synthetic_lab.hpp"

namespace rdime {

namespace fs = std::filesystem;

namespace {

std::string join_numbers(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out += ';';
        }
        out += format_number(v[i]);
    }
    return out;
}

std::uint64_t suite_seed(std::uint64_t master, std::uint64_t suite) {
    return trial_seed(master, 0x5eed0000ULL + suite);
}

SuiteOutcome risk_optimal_set_suite(const ValidateOptions& opt) {
    constexpr std::size_t kInstances = 200;
    std::mt19937_64 rng(suite_seed(opt.seed, 1));
    std::uniform_int_distribution<std::size_t> dim_dist(1, 12);
    std::normal_distribution<double> theta_dist(0.0, 2.0);
    std::uniform_real_distribution<double> eps_dist(0.1, 2.0);

    CsvWriter csv(opt.out_dir / "risk_optimal_set.csv");
    csv.row({"instance", "dim", "epsilon", "threshold_set_size", "threshold_set_risk", "brute_force_risk", "match"});
    std::size_t matches = 0;
    for (std::size_t i = 0; i < kInstances; ++i) {
        const std::size_t p = dim_dist(rng);
        Vector theta(p);
        for (auto& t : theta) {
            t = theta_dist(rng);
        }
        const double eps = eps_dist(rng);
        const auto set = oracle_indices(theta, eps);
        const double r = risk(set, theta, eps);
        const auto best = brute_force_optimal(theta, eps);
        const bool match = r == best.min_risk;
        matches += match ? 1 : 0;
        csv.row({std::to_string(i), std::to_string(p), format_number(eps), std::to_string(set.size()),
                 format_number(r), format_number(best.min_risk), match ? "true" : "false"});
    }
    csv.close();
    return {"risk-optimal-set", matches == kInstances,
            std::to_string(matches) + "/" + std::to_string(kInstances) + " instances at the brute-force minimum"};
}

SuiteOutcome unbiasedness_suite(const ValidateOptions& opt) {
    constexpr std::size_t kDim = 16;
    constexpr std::size_t kTrials = 100000;
    constexpr std::size_t kRequired = 15;
    constexpr double kZ = 4.0;

    std::mt19937_64 rng(suite_seed(opt.seed, 2));
    std::uniform_real_distribution<double> theta_dist(-2.0, 2.0);
    Vector theta(kDim);
    for (auto& t : theta) {
        t = theta_dist(rng);
    }

    CsvWriter csv(opt.out_dir / "unbiasedness.csv");
    csv.row({"docs", "attempt", "dim", "theta_sq", "mean", "stderr", "z", "within"});
    bool all_ok = true;
    std::ostringstream detail;
    for (const std::size_t m : {std::size_t{2}, std::size_t{8}}) {
        NoiseModelParams params;
        params.theta = theta;
        params.epsilon = 0.5;
        for (std::size_t i = 0; i < m; ++i) {
            params.sigmas.push_back(0.3 + 0.1 * static_cast<double>(i));
        }
        std::size_t within = 0;
        int attempt = 0;
        for (; attempt < 2; ++attempt) {
            const auto rep = mc_unbiasedness(params, kTrials, trial_seed(suite_seed(opt.seed, 20 + m), attempt), opt.threads);
            within = 0;
            for (std::size_t j = 0; j < kDim; ++j) {
                const double target = theta[j] * theta[j];
                const double z = (rep.per_dim_mean[j] - target) / rep.per_dim_stderr[j];
                const bool ok = std::abs(z) <= kZ;
                within += ok ? 1 : 0;
                csv.row({std::to_string(m), std::to_string(attempt), std::to_string(j), format_number(target),
                         format_number(rep.per_dim_mean[j]), format_number(rep.per_dim_stderr[j]), format_number(z),
                         ok ? "true" : "false"});
            }
            if (within >= kRequired) {
                break;
            }
        }
        const bool ok = within >= kRequired;
        all_ok = all_ok && ok;
        detail << "M=" << m << ": " << within << "/" << kDim << " dims within 4 stderr"
               << (attempt > 0 ? " after rerun" : "") << "; ";
    }
    csv.close();
    std::string d = detail.str();
    d.resize(d.size() - 2);
    return {"unbiasedness", all_ok, d};
}

SuiteOutcome mse_suite(const ValidateOptions& opt) {
    constexpr std::size_t kTrials = 200000;
    struct Case {
        const char* name;
        double theta;
        double epsilon;
        std::vector<double> sigmas;
        std::vector<double> weights;
    };
    const std::vector<Case> cases = {
        {"uniform-equal-sigma", 1.0, 0.5, {1.0, 1.0}, {0.5, 0.5}},
        {"inverse-variance", 1.0, 0.5, {1.0, 2.0}, {0.8, 0.2}},
        {"uniform-three-docs", 2.0, 0.3, {0.5, 1.0, 2.0}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}},
    };

    CsvWriter csv(opt.out_dir / "mse.csv");
    csv.row({"config", "theta", "epsilon", "sigmas", "weights", "closed_form", "empirical", "stderr", "tolerance",
             "within"});
    bool all_ok = true;
    std::size_t passed = 0;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& cs = cases[c];
        NoiseModelParams params{{cs.theta}, cs.epsilon, cs.sigmas};
        const WeightVector w(cs.weights);
        const auto rep = mc_mse(params, w, kTrials, suite_seed(opt.seed, 30 + c), opt.threads);
        const double cf = rep.closed_form_mse[0];
        const double emp = rep.empirical_mse[0];
        const double se = rep.empirical_mse_stderr[0];
        const double tol = std::max(0.03 * cf, 5.0 * se);
        const bool ok = std::abs(emp - cf) <= tol;
        passed += ok ? 1 : 0;
        all_ok = all_ok && ok;
        csv.row({cs.name, format_number(cs.theta), format_number(cs.epsilon), join_numbers(cs.sigmas),
                 join_numbers(cs.weights), format_number(cf), format_number(emp), format_number(se),
                 format_number(tol), ok ? "true" : "false"});
    }
    csv.close();

    // More documents at fixed sigma: MSE falls towards eps^2 theta^2.
    CsvWriter trend(opt.out_dir / "mse_trend.csv");
    trend.row({"docs", "closed_form", "empirical", "stderr"});
    double previous = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (const std::size_t m : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
        NoiseModelParams params{{1.0}, 0.5, std::vector<double>(m, 1.0)};
        const auto rep = mc_mse(params, WeightVector::uniform(m), kTrials, suite_seed(opt.seed, 40 + m), opt.threads);
        decreasing = decreasing && rep.empirical_mse[0] < previous && rep.empirical_mse[0] > 0.25;
        previous = rep.empirical_mse[0];
        trend.row({std::to_string(m), format_number(rep.closed_form_mse[0]), format_number(rep.empirical_mse[0]),
                   format_number(rep.empirical_mse_stderr[0])});
    }
    trend.close();

    return {"mse", all_ok && decreasing,
            std::to_string(passed) + "/" + std::to_string(cases.size()) + " configurations within tolerance; trend " +
                (decreasing ? "decreasing" : "NOT decreasing")};
}

SuiteOutcome optimal_weights_suite(const ValidateOptions& opt) {
    constexpr std::size_t kReps = 5;
    constexpr std::size_t kTrials = 20000;
    constexpr std::size_t kSimplexSamples = 1000;
    const std::vector<double> sigmas = {1.0, 2.0, 4.0};

    std::vector<double> inv(sigmas.size());
    double inv_sum = 0.0;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        inv[i] = 1.0 / (sigmas[i] * sigmas[i]);
        inv_sum += inv[i];
    }
    for (auto& v : inv) {
        v /= inv_sum;
    }
    const WeightVector optimal(inv);
    const auto uniform = WeightVector::uniform(sigmas.size());

    CsvWriter csv(opt.out_dir / "optimal_weights.csv");
    csv.row({"rep", "mse_optimal", "mse_uniform", "optimal_below"});
    std::size_t wins = 0;
    for (std::size_t r = 0; r < kReps; ++r) {
        NoiseModelParams params{{1.0, -0.5, 2.0, 0.25}, 0.5, sigmas};
        const std::uint64_t seed = suite_seed(opt.seed, 50 + r);
        const auto a = mc_mse(params, optimal, kTrials, seed, opt.threads);
        const auto b = mc_mse(params, uniform, kTrials, seed, opt.threads);
        double total_a = 0.0;
        double total_b = 0.0;
        for (std::size_t j = 0; j < params.dim(); ++j) {
            total_a += a.empirical_mse[j];
            total_b += b.empirical_mse[j];
        }
        const bool below = total_a < total_b;
        wins += below ? 1 : 0;
        csv.row({std::to_string(r), format_number(total_a), format_number(total_b), below ? "true" : "false"});
    }
    csv.close();

    auto spread = [&](std::span<const double> w) {
        double s = 0.0;
        for (std::size_t i = 0; i < sigmas.size(); ++i) {
            s += sigmas[i] * sigmas[i] * w[i] * w[i];
        }
        return s;
    };
    const double best = spread(optimal.values());
    std::mt19937_64 rng(suite_seed(opt.seed, 60));
    std::exponential_distribution<double> expo(1.0);
    CsvWriter simplex(opt.out_dir / "optimal_weights_simplex.csv");
    simplex.row({"sample", "spread", "optimal_spread", "optimal_not_above"});
    std::size_t ok_count = 0;
    for (std::size_t s = 0; s < kSimplexSamples; ++s) {
        std::vector<double> w(sigmas.size());
        double total = 0.0;
        for (auto& v : w) {
            v = expo(rng);
            total += v;
        }
        for (auto& v : w) {
            v /= total;
        }
        const double other = spread(w);
        const bool ok = best <= other;
        ok_count += ok ? 1 : 0;
        simplex.row({std::to_string(s), format_number(other), format_number(best), ok ? "true" : "false"});
    }
    simplex.close();

    return {"optimal-weights", wins == kReps && ok_count == kSimplexSamples,
            std::to_string(wins) + "/" + std::to_string(kReps) + " paired repetitions favour inverse-variance; " +
                std::to_string(ok_count) + "/" + std::to_string(kSimplexSamples) + " simplex samples not below optimum"};
}

SuiteOutcome recovery_suite(const ValidateOptions& opt) {
    SelectorFn selector;
    if (opt.flip_noise_sign) {
        selector = [](std::span<const double> q, const DimeScores& u) {
            const auto noise = estimate_noise(q, u);
            auto idx = threshold_indices(u, std::max(-noise.epsilon_sq_raw, 0.0));
            if (idx.empty()) {
                return SelectionMask::full(u.dim(), "rdime-fallback");
            }
            return SelectionMask(u.dim(), std::move(idx), "rdime");
        };
    }

    enum class Check { Exact, Recall, Degenerate };
    struct Case {
        const char* name;
        RecoveryConfig config;
        Check check;
    };
    auto make = [&](std::size_t dim, std::size_t support, double eps, double sigma, std::uint64_t salt) {
        RecoveryConfig c;
        c.dim = dim;
        c.support_size = support;
        c.theta_magnitude = 1.0;
        c.epsilon = eps;
        c.sigmas.assign(4, sigma);
        c.trials = 100;
        c.seed = suite_seed(opt.seed, salt);
        return c;
    };
    const std::vector<Case> cases = {
        {"sparse", make(1024, 16, 0.05, 1e-4, 70), Check::Exact},
        {"dense", make(64, 64, 0.1, 1e-3, 71), Check::Recall},
        {"null-signal", make(64, 0, 0.1, 0.1, 72), Check::Degenerate},
    };

    CsvWriter csv(opt.out_dir / "recovery.csv");
    csv.row({"config", "dim", "support", "epsilon", "sigma", "trials", "precision", "recall", "f1", "exact",
             "degenerate", "check", "pass"});
    bool all_ok = true;
    std::ostringstream detail;
    for (const auto& cs : cases) {
        const auto s = recovery_experiment(cs.config, selector, opt.threads);
        bool ok = false;
        const char* check = "";
        switch (cs.check) {
        case Check::Exact:
            ok = s.exact_matches == s.trials;
            check = "exact-recovery";
            break;
        case Check::Recall:
            ok = s.mean_recall == 1.0;
            check = "full-recall";
            break;
        case Check::Degenerate:
            ok = s.degenerate_trials == s.trials;
            check = "all-degenerate";
            break;
        }
        all_ok = all_ok && ok;
        detail << cs.name << ' ' << (ok ? "ok" : "FAILED") << " (exact " << s.exact_matches << "/" << s.trials
               << "); ";
        csv.row({cs.name, std::to_string(cs.config.dim), std::to_string(cs.config.support_size),
                 format_number(cs.config.epsilon), format_number(cs.config.sigmas.front()), std::to_string(s.trials),
                 format_number(s.mean_precision), format_number(s.mean_recall), format_number(s.mean_f1),
                 std::to_string(s.exact_matches), std::to_string(s.degenerate_trials), check, ok ? "true" : "false"});
    }
    csv.close();
    std::string d = detail.str();
    d.resize(d.size() - 2);
    return {"recovery", all_ok, d};
}

}

bool ValidateReport::passed() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteOutcome& s) { return s.passed; });
}

ValidateReport run_validate(const ValidateOptions& options) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) {
        throw StoreError(StoreError::Kind::Io, "cannot create " + options.out_dir.string() + ": " + ec.message());
    }

    ValidateReport report;
    report.suites.push_back(risk_optimal_set_suite(options));
    report.suites.push_back(unbiasedness_suite(options));
    report.suites.push_back(mse_suite(options));
    report.suites.push_back(optimal_weights_suite(options));
    report.suites.push_back(recovery_suite(options));

    CsvWriter summary(options.out_dir / "summary.csv");
    summary.row({"suite", "passed", "detail"});
    for (const auto& s : report.suites) {
        summary.row({s.name, s.passed ? "true" : "false", s.detail});
    }
    summary.close();
    return report;
}

}
