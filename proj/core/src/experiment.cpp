#include "rdime/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rdime/csv.hpp"
#include "rdime/parallel.hpp"
#include "rdime/report.hpp"

namespace rdime {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kTopLevelKeys = {
    "queries", "corpus",       "qrels",   "first_stage_run", "synthetic_docs",     "estimator",
    "M",       "policies",     "cutoff",  "top_n",           "seed",               "alpha",
    "similarity", "t_alternative", "wilcoxon_alternative", "model", "collection",
};

const std::map<std::string, std::set<std::string, std::less<>>, std::less<>> kSchemeKeys = {
    {"uniform", {}},
    {"softmax", {"temperature"}},
    {"single", {}},
    {"inverse-variance", {"sigmas"}},
    {"rbf", {"gamma"}},
    {"sigmoid", {"a", "c"}},
};

void reject_unknown(const json& obj, const std::set<std::string, std::less<>>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError(where + ": missing required key '" + key + "'");
    }
    return *it;
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) {
        throw ConfigError("'" + key + "' must be a string");
    }
    return v.get<std::string>();
}

double as_number(const json& v, const std::string& key) {
    if (!v.is_number()) {
        throw ConfigError("'" + key + "' must be a number");
    }
    return v.get<double>();
}

std::uint64_t as_unsigned(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError("'" + key + "' must be a non-negative integer");
}

fs::path resolve(const fs::path& base, const std::string& text) {
    fs::path p(text);
    if (p.is_relative() && !base.empty()) {
        p = base / p;
    }
    return p.lexically_normal();
}

WeightScheme parse_estimator(const json& e, std::string& label) {
    if (!e.is_object()) {
        throw ConfigError("'estimator' must be an object");
    }
    const std::string name = as_string(require(e, "scheme", "estimator"), "estimator.scheme");
    const auto keys = kSchemeKeys.find(name);
    if (keys == kSchemeKeys.end()) {
        throw ConfigError("estimator: unknown scheme '" + name +
                          "' (expected uniform, softmax, single, inverse-variance, rbf or sigmoid)");
    }
    auto allowed = keys->second;
    allowed.insert("scheme");
    allowed.insert("label");
    reject_unknown(e, allowed, "estimator (" + name + ")");
    if (e.contains("label")) {
        label = as_string(e.at("label"), "estimator.label");
    }

    auto number_or = [&](const char* key, double fallback) {
        return e.contains(key) ? as_number(e.at(key), std::string("estimator.") + key) : fallback;
    };
    WeightScheme s;
    if (name == "uniform") {
        s = scheme::Uniform{};
    } else if (name == "softmax") {
        s = scheme::SoftmaxScores{number_or("temperature", 1.0)};
    } else if (name == "single") {
        s = scheme::SingleDoc{};
    } else if (name == "inverse-variance") {
        const auto& arr = require(e, "sigmas", "estimator (inverse-variance)");
        if (!arr.is_array()) {
            throw ConfigError("'estimator.sigmas' must be an array of numbers");
        }
        scheme::InverseVariance iv;
        for (const auto& v : arr) {
            iv.sigmas.push_back(as_number(v, "estimator.sigmas[]"));
        }
        s = iv;
    } else if (name == "rbf") {
        s = scheme::Rbf{number_or("gamma", 1.0)};
    } else {
        s = scheme::Sigmoid{number_or("a", 1.0), number_or("c", 0.0)};
    }
    try {
        validate_scheme(s);
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("estimator: ") + ex.what());
    }
    return s;
}

json estimator_to_json(const WeightScheme& s, const std::string& label) {
    json e;
    e["scheme"] = scheme_name(s);
    e["label"] = label;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, scheme::SoftmaxScores>) {
                e["temperature"] = v.temperature;
            } else if constexpr (std::is_same_v<T, scheme::InverseVariance>) {
                e["sigmas"] = v.sigmas;
            } else if constexpr (std::is_same_v<T, scheme::Rbf>) {
                e["gamma"] = v.gamma;
            } else if constexpr (std::is_same_v<T, scheme::Sigmoid>) {
                e["a"] = v.a;
                e["c"] = v.c;
            }
        },
        s);
    return e;
}

void check_file(const fs::path& p, const char* what) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
        throw StoreError(StoreError::Kind::Io, std::string(what) + " file not found: " + p.string());
    }
}

bool is_topk(const SelectionPolicy& p) {
    return std::holds_alternative<policy::TopKFraction>(p);
}

std::string synthetic_owner(const std::string& id) {
    const auto hash = id.find('#');
    return hash == std::string::npos ? id : id.substr(0, hash);
}

void compare_metric(const ExperimentConfig& config, const ExperimentResult& result, bool use_ndcg,
                    std::vector<Comparison>& out) {
    const auto* rd = result.find("rdime");
    if (rd == nullptr) {
        return;
    }
    auto report_of = [&](const PolicyOutcome& p) -> const MetricReport& { return use_ndcg ? p.ndcg : p.ap; };
    const auto x = report_of(*rd).values();
    const TestRouting routing{config.t_alternative, config.wilcoxon_alternative};

    std::vector<Comparison> local;
    const PolicyOutcome* best = nullptr;
    for (std::size_t i = 0; i < result.policies.size(); ++i) {
        const auto& other = result.policies[i];
        if (other.policy == "rdime") {
            continue;
        }
        const auto y = report_of(other).values();
        local.push_back(Comparison{report_of(other).metric_name, "rdime vs " + other.policy, paired_compare(x, y, routing)});
        if (is_topk(config.policies[i]) && (best == nullptr || report_of(other).mean > report_of(*best).mean)) {
            best = &other;
        }
    }
    if (best != nullptr) {
        const auto y = report_of(*best).values();
        local.push_back(Comparison{report_of(*best).metric_name, "rdime vs best-topk (" + best->policy + ")",
                                   paired_compare(x, y, routing)});
    }
    std::vector<double> p;
    for (const auto& c : local) {
        p.push_back(c.result.p_value);
    }
    const auto reject = holm_bonferroni(p, config.alpha);
    for (std::size_t i = 0; i < local.size(); ++i) {
        local[i].result.corrected_reject = reject[i];
        out.push_back(std::move(local[i]));
    }
}

}

void ExperimentConfig::validate() const {
    check_file(queries, "queries");
    check_file(corpus, "corpus");
    check_file(qrels, "qrels");
    if (first_stage_run) {
        check_file(*first_stage_run, "first_stage_run");
    }
    if (synthetic_docs) {
        check_file(*synthetic_docs, "synthetic_docs");
    }
    if (first_stage_run && synthetic_docs) {
        throw ConfigError("first_stage_run and synthetic_docs are mutually exclusive");
    }
    if (feedback_docs == 0) {
        throw ConfigError("'M' must be at least 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("'alpha' must lie in (0, 1)");
    }
    if (cutoff == 0) {
        throw ConfigError("'cutoff' must be at least 1");
    }
    if (top_n == 0) {
        throw ConfigError("'top_n' must be at least 1");
    }
    if (policies.empty()) {
        throw ConfigError("'policies' must list at least one policy");
    }
    std::set<std::string> seen;
    for (const auto& p : policies) {
        if (std::holds_alternative<policy::Oracle>(p)) {
            throw ConfigError("policy 'oracle' needs the latent signal and is only available in the synthetic lab");
        }
        if (!seen.insert(policy_name(p)).second) {
            throw ConfigError("policy '" + policy_name(p) + "' listed twice");
        }
    }
    if (const auto* iv = std::get_if<scheme::InverseVariance>(&estimator)) {
        if (iv->sigmas.size() != feedback_docs) {
            throw ConfigError("estimator.sigmas has " + std::to_string(iv->sigmas.size()) + " entries but M = " +
                              std::to_string(feedback_docs));
        }
    }
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& ex) {
        throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
    }
    if (!root.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    reject_unknown(root, kTopLevelKeys, "config");

    ExperimentConfig c;
    c.queries = resolve(base_dir, as_string(require(root, "queries", "config"), "queries"));
    c.corpus = resolve(base_dir, as_string(require(root, "corpus", "config"), "corpus"));
    c.qrels = resolve(base_dir, as_string(require(root, "qrels", "config"), "qrels"));
    if (root.contains("first_stage_run")) {
        c.first_stage_run = resolve(base_dir, as_string(root.at("first_stage_run"), "first_stage_run"));
    }
    if (root.contains("synthetic_docs")) {
        c.synthetic_docs = resolve(base_dir, as_string(root.at("synthetic_docs"), "synthetic_docs"));
    }
    c.estimator = parse_estimator(require(root, "estimator", "config"), c.estimator_label);
    if (c.estimator_label.empty()) {
        c.estimator_label = scheme_name(c.estimator);
    }
    if (root.contains("M")) {
        c.feedback_docs = as_unsigned(root.at("M"), "M");
    }

    const auto& policies = require(root, "policies", "config");
    if (!policies.is_array()) {
        throw ConfigError("'policies' must be an array of strings");
    }
    for (const auto& p : policies) {
        try {
            c.policies.push_back(parse_policy(as_string(p, "policies[]")));
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("policies: ") + ex.what());
        }
    }

    if (root.contains("cutoff")) {
        c.cutoff = as_unsigned(root.at("cutoff"), "cutoff");
    }
    if (root.contains("top_n")) {
        c.top_n = as_unsigned(root.at("top_n"), "top_n");
    }
    if (root.contains("seed")) {
        c.seed = as_unsigned(root.at("seed"), "seed");
    }
    if (root.contains("alpha")) {
        c.alpha = as_number(root.at("alpha"), "alpha");
    }
    if (root.contains("similarity")) {
        const auto s = as_string(root.at("similarity"), "similarity");
        if (s == "dot") {
            c.similarity = Similarity::DotProduct;
        } else if (s == "cosine") {
            c.similarity = Similarity::Cosine;
        } else {
            throw ConfigError("'similarity' must be \"dot\" or \"cosine\", got \"" + s + "\"");
        }
    }
    try {
        if (root.contains("t_alternative")) {
            c.t_alternative = parse_alternative(as_string(root.at("t_alternative"), "t_alternative"));
        }
        if (root.contains("wilcoxon_alternative")) {
            c.wilcoxon_alternative =
                parse_alternative(as_string(root.at("wilcoxon_alternative"), "wilcoxon_alternative"));
        }
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    if (root.contains("model")) {
        c.model = as_string(root.at("model"), "model");
    }
    if (root.contains("collection")) {
        c.collection = as_string(root.at("collection"), "collection");
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError(StoreError::Kind::Io, "cannot open config " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& c) {
    json root;
    root["queries"] = c.queries.string();
    root["corpus"] = c.corpus.string();
    root["qrels"] = c.qrels.string();
    if (c.first_stage_run) {
        root["first_stage_run"] = c.first_stage_run->string();
    }
    if (c.synthetic_docs) {
        root["synthetic_docs"] = c.synthetic_docs->string();
    }
    root["estimator"] = estimator_to_json(c.estimator, c.estimator_label);
    root["M"] = c.feedback_docs;
    json policies = json::array();
    for (const auto& p : c.policies) {
        policies.push_back(policy_name(p));
    }
    root["policies"] = policies;
    root["cutoff"] = c.cutoff;
    root["top_n"] = c.top_n;
    root["seed"] = c.seed;
    root["alpha"] = c.alpha;
    root["similarity"] = c.similarity == Similarity::Cosine ? "cosine" : "dot";
    root["t_alternative"] = alternative_name(c.t_alternative);
    root["wilcoxon_alternative"] = alternative_name(c.wilcoxon_alternative);
    root["model"] = c.model;
    root["collection"] = c.collection;
    return root.dump(2) + "\n";
}

const PolicyOutcome* ExperimentResult::find(std::string_view policy) const {
    for (const auto& p : policies) {
        if (p.policy == policy) {
            return &p;
        }
    }
    return nullptr;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads) {
    config.validate();
    const auto queries = load_embeddings(config.queries);
    const auto corpus = load_embeddings(config.corpus);
    const auto qrels = load_qrels(config.qrels);
    std::optional<std::vector<RunRanking>> first_stage;
    std::optional<EmbeddingMatrix> synthetic;
    if (config.first_stage_run) {
        first_stage = load_run(*config.first_stage_run);
    }
    if (config.synthetic_docs) {
        synthetic = load_embeddings(*config.synthetic_docs);
    }
    return run_experiment(config, queries, corpus, qrels, first_stage ? &*first_stage : nullptr,
                          synthetic ? &*synthetic : nullptr, threads);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const EmbeddingMatrix& queries,
                                const EmbeddingMatrix& corpus, const Qrels& qrels,
                                const std::vector<RunRanking>* first_stage, const EmbeddingMatrix* synthetic,
                                std::size_t threads) {
    if (queries.empty()) {
        throw ConfigError("query embeddings are empty");
    }
    if (corpus.empty()) {
        throw ConfigError("corpus embeddings are empty");
    }
    if (queries.dim() != corpus.dim()) {
        throw ConfigError("query embeddings have " + std::to_string(queries.dim()) + " dims, corpus has " +
                          std::to_string(corpus.dim()));
    }
    if (synthetic != nullptr && synthetic->dim() != corpus.dim()) {
        throw ConfigError("synthetic documents have " + std::to_string(synthetic->dim()) + " dims, corpus has " +
                          std::to_string(corpus.dim()));
    }

    std::map<std::string, const RunRanking*, std::less<>> first_stage_by_query;
    if (first_stage != nullptr) {
        for (const auto& r : *first_stage) {
            first_stage_by_query.emplace(r.query_id, &r);
        }
    }
    std::map<std::string, std::vector<std::size_t>, std::less<>> synthetic_rows;
    if (synthetic != nullptr) {
        for (std::size_t i = 0; i < synthetic->size(); ++i) {
            synthetic_rows[synthetic_owner(synthetic->id(i))].push_back(i);
        }
    }

    const std::size_t nq = queries.size();
    const std::size_t np = config.policies.size();
    std::vector<std::vector<RunRanking>> runs(np, std::vector<RunRanking>(nq));
    std::vector<std::vector<std::optional<SelectionMask>>> masks(np, std::vector<std::optional<SelectionMask>>(nq));

    ScoringConfig scoring;
    scoring.similarity = config.similarity;
    scoring.top_n = config.top_n;
    scoring.threads = 1;

    parallel_blocks(nq, 1, threads == 0 ? default_threads() : threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t qi = begin; qi < end; ++qi) {
            const std::string& qid = queries.id(qi);
            const auto q = queries.row(qi);
            const Vector qd = to_vector(q);

            std::vector<FeedbackDocument> feedback;
            if (first_stage != nullptr) {
                const auto it = first_stage_by_query.find(qid);
                if (it == first_stage_by_query.end()) {
                    throw ConfigError("first-stage run has no ranking for query " + qid);
                }
                feedback = pseudo_relevant_from_run(*it->second, corpus, config.feedback_docs);
            } else if (synthetic != nullptr) {
                const auto it = synthetic_rows.find(qid);
                if (it == synthetic_rows.end()) {
                    throw ConfigError("no synthetic documents for query " + qid);
                }
                for (std::size_t r : it->second) {
                    if (feedback.size() == config.feedback_docs) {
                        break;
                    }
                    feedback.push_back(FeedbackDocument{synthetic->id(r), to_vector(synthetic->row(r))});
                }
            } else {
                feedback = first_stage_top_m(q, corpus, config.feedback_docs, 1);
            }

            auto u = estimate(qd, vectors_of(feedback), config.estimator);
            u.query_id = qid;
            for (std::size_t pi = 0; pi < np; ++pi) {
                const std::string name = policy_name(config.policies[pi]);
                auto mask = apply_policy(config.policies[pi], qd, u);
                runs[pi][qi] = rank_all(q, corpus, mask, scoring, qid, name);
                masks[pi][qi] = std::move(mask);
            }
        }
    });

    ExperimentResult result;
    result.query_ids = queries.ids();
    for (std::size_t pi = 0; pi < np; ++pi) {
        PolicyOutcome out;
        out.policy = policy_name(config.policies[pi]);
        out.runs = std::move(runs[pi]);
        for (auto& m : masks[pi]) {
            out.masks.push_back(std::move(*m));
        }
        out.ndcg = evaluate(Metric::NdcgAtK, out.runs, qrels, config.cutoff);
        out.ap = evaluate(Metric::AveragePrecision, out.runs, qrels);
        out.retained = retained_fraction_summary(out.masks);
        result.policies.push_back(std::move(out));
    }
    compare_metric(config, result, true, result.comparisons);
    compare_metric(config, result, false, result.comparisons);
    return result;
}

std::string policy_file_stem(const std::string& policy) {
    std::string out = policy;
    std::replace(out.begin(), out.end(), ':', '-');
    return out;
}

void write_experiment(const ExperimentConfig& config, const ExperimentResult& result, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir / "runs", ec);
    if (ec) {
        throw StoreError(StoreError::Kind::Io, "cannot create " + (out_dir / "runs").string() + ": " + ec.message());
    }

    {
        std::ofstream snap(out_dir / "config.json", std::ios::binary | std::ios::trunc);
        snap << config_to_json(config);
        if (!snap) {
            throw StoreError(StoreError::Kind::Io, "cannot write " + (out_dir / "config.json").string());
        }
    }

    for (const auto& p : result.policies) {
        write_run(out_dir / "runs" / (policy_file_stem(p.policy) + ".run"), p.runs, p.policy);
    }

    CsvWriter metrics(out_dir / "metrics.csv");
    metrics.row({"policy", "metric", "query_id", "value"});
    for (const auto& p : result.policies) {
        for (const MetricReport* m : {&p.ndcg, &p.ap}) {
            for (const auto& [qid, v] : m->per_query) {
                metrics.row({p.policy, m->metric_name, qid, format_number(v)});
            }
            metrics.row({p.policy, m->metric_name, "all", format_number(m->mean)});
        }
    }
    metrics.close();

    CsvWriter sig(out_dir / "significance.csv");
    sig.row({"comparison", "test", "statistic", "p", "reject"});
    for (const auto& c : result.comparisons) {
        sig.row({c.metric + ": " + c.label, c.result.test_name, format_number(c.result.statistic),
                 format_number(c.result.p_value), c.result.corrected_reject ? "true" : "false"});
    }
    sig.close();

    CsvWriter masks(out_dir / "masks.csv");
    masks.row({"query_id", "policy", "retained", "dim", "fraction"});
    for (const auto& p : result.policies) {
        for (std::size_t qi = 0; qi < p.masks.size(); ++qi) {
            const auto& m = p.masks[qi];
            masks.row({result.query_ids[qi], p.policy, std::to_string(m.size()), std::to_string(m.dim()),
                       format_number(m.fraction())});
        }
    }
    masks.close();

    CsvWriter summary(out_dir / "retained_summary.csv");
    summary.row({"policy", "min", "q1", "median", "q3", "max", "mean"});
    for (const auto& p : result.policies) {
        const auto& s = p.retained;
        summary.row({p.policy, format_number(s.min), format_number(s.q1), format_number(s.median),
                     format_number(s.q3), format_number(s.max), format_number(s.mean)});
    }
    summary.close();

    for (const bool ndcg : {true, false}) {
        const std::string file = ndcg ? "results.csv" : "results_ap.csv";
        CsvWriter results(out_dir / file);
        const std::string metric = ndcg ? metric_name(Metric::NdcgAtK, config.cutoff) : metric_name(Metric::AveragePrecision);
        results.row({"model", "estimator", "collection", "policy", metric, "retained_fraction"});
        for (const auto& p : result.policies) {
            results.row({config.model, config.estimator_label, config.collection, p.policy,
                         format_number(ndcg ? p.ndcg.mean : p.ap.mean), format_number(p.retained.mean)});
        }
        results.close();
    }

    if (result.find("rdime") != nullptr &&
        std::any_of(config.policies.begin(), config.policies.end(), [](const auto& p) { return is_topk(p); })) {
        run_report(out_dir);
    }
}

}
