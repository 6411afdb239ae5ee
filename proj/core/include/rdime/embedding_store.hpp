#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

/**
 * @file embedding_store.hpp
 *
 * @brief Embedding matrices, relevance judgments and ranked runs, plus their on-disk formats.
 *
 * Embeddings live in the EMB1 binary format (all integers little-endian):
 *
 *     "EMB1" | u32 n | u32 p | n x ( u16 id_len | id bytes (UTF-8) | p x f32 )
 *
 * with no padding and no trailing bytes. Qrels and runs use the usual TREC
 * 4-column and 6-column text layouts.
 */

namespace rdime {

/**
 * @brief Failure raised by the loaders and writers in this header.
 */
class StoreError : public std::runtime_error {
public:
    enum class Kind {
        Io,
        BadMagic,
        Truncated,
        TrailingBytes,
        NonFinite,
        DuplicateId,
        Malformed,
        NegativeGrade,
        InvalidRun,
    };

    StoreError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/**
 * @brief Immutable, id-indexed n x p matrix of f32 vectors stored row-major.
 *
 * The constructor enforces the invariants: one id per row, ids distinct, every
 * value finite, and `values.size() == n * dim`.
 */
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return ids_.empty(); }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(values_).subspan(i * dim_, dim_);
    }

    const std::string& id(std::size_t i) const { return ids_[i]; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> values() const noexcept { return values_; }

    std::optional<std::size_t> find(std::string_view id) const;

    /// Bitwise equality on values (so -0.0 and +0.0 differ) and exact equality on ids.
    friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<float> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Parses an EMB1 image held in memory. `source` only labels error messages.
EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes, std::string_view source = "<memory>");

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& matrix);

/**
 * @brief Graded relevance judgments keyed by (query id, document id).
 *
 * Unjudged pairs have grade 0.
 */
class Qrels {
public:
    using DocGrades = std::map<std::string, int, std::less<>>;

    void set(const std::string& query_id, const std::string& doc_id, int grade);

    int grade(std::string_view query_id, std::string_view doc_id) const;

    /// All judgments for a query, or nullptr if the query has none.
    const DocGrades* judged(std::string_view query_id) const;

    std::size_t size() const noexcept;
    bool empty() const noexcept { return by_query_.empty(); }

    const std::map<std::string, DocGrades, std::less<>>& by_query() const noexcept { return by_query_; }

private:
    std::map<std::string, DocGrades, std::less<>> by_query_;
};

Qrels load_qrels(const std::filesystem::path& path);
Qrels parse_qrels(std::istream& in);

struct RunEntry {
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;

    bool operator==(const RunEntry&) const = default;
};

/**
 * @brief Ranked list for one query.
 *
 * Valid when ranks are 1..n without gaps, scores are non-increasing and doc ids are distinct.
 */
struct RunRanking {
    std::string query_id;
    std::vector<RunEntry> entries;
    std::string tag;
};

/// Throws StoreError(InvalidRun) describing the first violated invariant.
void validate_run(const RunRanking& run);

/// Emits "qid Q0 docid rank score tag" lines, score with 6 decimals. `tag` overrides each run's own tag.
void write_run(const std::filesystem::path& path, std::span<const RunRanking> rankings, const std::string& tag);
void write_run(std::ostream& out, std::span<const RunRanking> rankings, const std::string& tag);

/// Reads a TREC run. Queries come back in first-appearance order with entries sorted by rank.
std::vector<RunRanking> load_run(const std::filesystem::path& path);
std::vector<RunRanking> parse_run(std::istream& in);

}
