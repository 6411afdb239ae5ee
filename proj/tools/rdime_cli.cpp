// rdime: command-line front end.
//
//   rdime validate [--seed N] [--out DIR]
//   rdime experiment --config PATH --out DIR
//   rdime report --in DIR
//
// Worker threads default to RDIME_THREADS, else the hardware concurrency.
// Exit status: 0 ok, 1 validation or input-check failure, 2 usage or I/O error.

#include <cstdlib>
#include <iostream>
#include <string>

#ifdef RDIME_CLI11_SINGLE_HEADER
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "rdime/embedding_store.hpp"
#include "rdime/experiment.hpp"
#include "rdime/parallel.hpp"
#include "rdime/report.hpp"
#include "rdime/validate.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

int do_validate(const rdime::ValidateOptions& options) {
    const auto report = rdime::run_validate(options);
    for (const auto& s : report.suites) {
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << '\n';
    }
    std::cout << "reports written to " << options.out_dir.string() << '\n';
    return report.passed() ? kOk : kFailed;
}

int do_experiment(const std::string& config_path, const std::string& out_dir) {
    const auto config = rdime::load_experiment_config(config_path);
    config.validate();
    const auto result = rdime::run_experiment(config, rdime::default_threads());
    rdime::write_experiment(config, result, out_dir);
    for (const auto& p : result.policies) {
        std::cout << p.policy << ": " << p.ndcg.metric_name << '=' << p.ndcg.mean << " ap=" << p.ap.mean
                  << " retained=" << p.retained.mean << '\n';
    }
    std::cout << "results written to " << out_dir << '\n';
    return kOk;
}

int do_report(const std::string& in_dir) {
    const auto report = rdime::run_report(in_dir);
    std::cout << report.text;
    return kOk;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Dimension importance estimation and risk-based pruning for dense retrieval"};
    app.require_subcommand(1);

    rdime::ValidateOptions vopt;
    std::string vout = vopt.out_dir.string();
    auto* validate = app.add_subcommand("validate", "Run the synthetic self-check suites");
    validate->add_option("--seed", vopt.seed, "Master seed")->capture_default_str();
    validate->add_option("--out", vout, "Directory for CSV reports")->capture_default_str();
    // Test-only fault injection; hidden from --help.
    validate->add_flag("--inject-noise-sign-fault", vopt.flip_noise_sign)->group("");

    std::string config_path;
    std::string exp_out;
    auto* experiment = app.add_subcommand("experiment", "Run a retrieval comparison from a JSON config");
    experiment->add_option("--config", config_path, "Experiment config (JSON)")->required();
    experiment->add_option("--out", exp_out, "Output directory")->required();

    std::string report_in;
    auto* report = app.add_subcommand("report", "Aggregate results.csv files into comparison tables");
    report->add_option("--in", report_in, "Results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*validate) {
            vopt.out_dir = vout;
            vopt.threads = rdime::default_threads();
            return do_validate(vopt);
        }
        if (*experiment) {
            return do_experiment(config_path, exp_out);
        }
        return do_report(report_in);
    } catch (const rdime::StoreError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == rdime::StoreError::Kind::Io ? kUsage : kFailed;
    } catch (const rdime::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    } catch (const rdime::ReportError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
