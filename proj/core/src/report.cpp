#include "rdime/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "rdime/csv.hpp"
#include "rdime/embedding_store.hpp"

namespace rdime {

namespace fs = std::filesystem;

namespace {

bool is_results_file(const fs::path& p) {
    const std::string name = p.filename().string();
    if (p.extension() != ".csv") {
        return false;
    }
    return name == "results.csv" || name.rfind("results_", 0) == 0;
}

double parse_value(const std::string& text, const fs::path& file) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw ReportError(file.string() + ": '" + text + "' is not a number");
    }
    return v;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render_text(const std::vector<ReportRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string>;
    std::vector<Key> tables;
    std::map<Key, std::vector<const ReportRow*>> grouped;
    for (const auto& r : rows) {
        Key k{r.model, r.collection, r.metric};
        if (!grouped.contains(k)) {
            tables.push_back(k);
        }
        grouped[k].push_back(&r);
    }

    std::ostringstream out;
    for (std::size_t t = 0; t < tables.size(); ++t) {
        const auto& group = grouped[tables[t]];
        std::vector<std::string> policies;
        for (const auto* r : group) {
            for (const auto& c : r->cells) {
                if (std::find(policies.begin(), policies.end(), c.policy) == policies.end()) {
                    policies.push_back(c.policy);
                }
            }
        }

        std::vector<std::vector<std::string>> grid;
        std::vector<std::string> head{"estimator"};
        head.insert(head.end(), policies.begin(), policies.end());
        head.push_back("delta%");
        grid.push_back(head);
        for (const auto* r : group) {
            std::vector<std::string> line{r->estimator};
            for (const auto& p : policies) {
                const auto it = std::find_if(r->cells.begin(), r->cells.end(),
                                             [&](const PolicyCell& c) { return c.policy == p; });
                line.push_back(it == r->cells.end() ? "-"
                                                     : format_fixed(it->value, 3) + " (" +
                                                           format_fixed(it->retained_fraction, 2) + ")");
            }
            line.push_back(format_delta(r->delta_pct));
            grid.push_back(line);
        }

        std::vector<std::size_t> width(head.size(), 0);
        for (const auto& line : grid) {
            for (std::size_t c = 0; c < line.size(); ++c) {
                width[c] = std::max(width[c], line[c].size());
            }
        }
        if (t > 0) {
            out << '\n';
        }
        out << std::get<0>(tables[t]) << " / " << std::get<1>(tables[t]) << " / " << std::get<2>(tables[t]) << '\n';
        for (const auto& line : grid) {
            std::string text;
            for (std::size_t c = 0; c < line.size(); ++c) {
                text += c + 1 == line.size() ? line[c] : pad(line[c], width[c] + 2);
            }
            out << text << '\n';
        }
    }
    return out.str();
}

}

double delta_percent(double rdime, double best_topk) {
    if (best_topk == 0.0) {
        return rdime == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    }
    return 100.0 * (rdime - best_topk) / best_topk;
}

std::string format_delta(double delta_pct) {
    if (std::isnan(delta_pct)) {
        return "nan";
    }
    double rounded = std::round(delta_pct * 100.0) / 100.0;
    if (rounded == 0.0) {
        rounded = 0.0;
    }
    return format_fixed(rounded, 2);
}

Report build_report(const fs::path& results_dir) {
    std::error_code ec;
    if (!fs::is_directory(results_dir, ec)) {
        throw StoreError(StoreError::Kind::Io, "results directory not found: " + results_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(results_dir, ec)) {
        if (entry.is_regular_file() && is_results_file(entry.path())) {
            files.push_back(entry.path());
        }
    }
    if (ec) {
        throw StoreError(StoreError::Kind::Io, "cannot scan " + results_dir.string() + ": " + ec.message());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ReportError("no results.csv files under " + results_dir.string());
    }

    using Key = std::tuple<std::string, std::string, std::string, std::string>;
    std::vector<Key> order;
    std::map<Key, ReportRow> rows;
    for (const auto& file : files) {
        CsvTable table;
        try {
            table = read_csv(file);
        } catch (const StoreError& ex) {
            if (ex.kind() == StoreError::Kind::Io) {
                throw;
            }
            throw ReportError(ex.what());
        }
        if (table.header.size() != 6) {
            throw ReportError(file.string() + ": expected 6 columns, found " + std::to_string(table.header.size()));
        }
        std::size_t cm = 0;
        std::size_t ce = 0;
        std::size_t cc = 0;
        std::size_t cp = 0;
        std::size_t cf = 0;
        try {
            cm = table.column("model");
            ce = table.column("estimator");
            cc = table.column("collection");
            cp = table.column("policy");
            cf = table.column("retained_fraction");
        } catch (const StoreError& ex) {
            throw ReportError(file.string() + ": " + ex.what());
        }
        const std::size_t cv = 4;
        const std::string metric = table.header[cv];
        for (const auto& line : table.rows) {
            Key key{line[cm], line[ce], line[cc], metric};
            auto it = rows.find(key);
            if (it == rows.end()) {
                order.push_back(key);
                ReportRow r;
                r.model = line[cm];
                r.estimator = line[ce];
                r.collection = line[cc];
                r.metric = metric;
                it = rows.emplace(key, std::move(r)).first;
            }
            auto& cells = it->second.cells;
            if (std::any_of(cells.begin(), cells.end(), [&](const PolicyCell& c) { return c.policy == line[cp]; })) {
                throw ReportError(file.string() + ": duplicate row for policy '" + line[cp] + "'");
            }
            cells.push_back(PolicyCell{line[cp], parse_value(line[cv], file), parse_value(line[cf], file)});
        }
    }

    Report report;
    for (const auto& key : order) {
        ReportRow r = rows.at(key);
        const std::string where = r.model + "/" + r.estimator + "/" + r.collection + "/" + r.metric;
        const PolicyCell* best = nullptr;
        const PolicyCell* rd = nullptr;
        for (const auto& c : r.cells) {
            if (c.policy == "rdime") {
                rd = &c;
            } else if (c.policy.rfind("topk", 0) == 0 && (best == nullptr || c.value > best->value)) {
                best = &c;
            }
        }
        if (rd == nullptr) {
            throw ReportError(where + ": policy 'rdime' is absent");
        }
        if (best == nullptr) {
            throw ReportError(where + ": no Top-k policy rows (expected 'topk:<k>')");
        }
        r.best_topk = best->policy;
        r.best_topk_value = best->value;
        r.rdime_value = rd->value;
        r.rdime_fraction = rd->retained_fraction;
        r.delta_pct = delta_percent(rd->value, best->value);
        report.rows.push_back(std::move(r));
    }
    report.text = render_text(report.rows);
    return report;
}

Report run_report(const fs::path& results_dir) {
    Report report = build_report(results_dir);

    CsvWriter csv(results_dir / "report.csv");
    csv.row({"model", "estimator", "collection", "metric", "best_topk", "best_topk_value", "rdime", "rdime_retained",
             "delta_pct"});
    for (const auto& r : report.rows) {
        csv.row({r.model, r.estimator, r.collection, r.metric, r.best_topk, format_number(r.best_topk_value),
                 format_number(r.rdime_value), format_number(r.rdime_fraction), format_delta(r.delta_pct)});
    }
    csv.close();

    std::ofstream txt(results_dir / "report.txt", std::ios::binary | std::ios::trunc);
    txt << report.text;
    if (!txt) {
        throw StoreError(StoreError::Kind::Io, "cannot write " + (results_dir / "report.txt").string());
    }
    return report;
}

}
