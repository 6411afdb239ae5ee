#include "rdime/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace rdime {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::string single_quoted(std::string_view s) {
    std::string out = "'";
    out += s;
    out += "'";
    return out;
}

class ByteReader {
public:
    ByteReader(std::span<const std::byte> bytes, std::string_view source) : bytes_(bytes), source_(source) {}

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return bytes_.size() - offset_; }

    void require(std::size_t count, std::size_t more_after, const char* what) const {
        if (remaining() < count) {
            std::ostringstream msg;
            msg << source_ << ": truncated EMB1 payload while reading " << what
                << ": expected at least " << (offset_ + count + more_after) << " bytes, file has " << bytes_.size();
            throw StoreError(StoreError::Kind::Truncated, msg.str());
        }
    }

    std::uint16_t u16() {
        std::uint16_t v = std::to_integer<std::uint16_t>(bytes_[offset_]) |
                          static_cast<std::uint16_t>(std::to_integer<std::uint16_t>(bytes_[offset_ + 1]) << 8);
        offset_ += 2;
        return v;
    }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | std::to_integer<std::uint32_t>(bytes_[offset_ + i]);
        }
        offset_ += 4;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::string text(std::size_t len) {
        std::string s(len, '\0');
        std::memcpy(s.data(), bytes_.data() + offset_, len);
        offset_ += len;
        return s;
    }

private:
    std::span<const std::byte> bytes_;
    std::string_view source_;
    std::size_t offset_ = 0;
};

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
    out.push_back(static_cast<std::byte>(v & 0xff));
    out.push_back(static_cast<std::byte>(v >> 8));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
    }
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        fields.push_back(std::move(tok));
    }
    return fields;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
    // std::from_chars for double is not available on every toolchain we target.
    char* end = nullptr;
    errno = 0;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && !s.empty() && errno == 0 && std::isfinite(out);
}

}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) {
        throw std::invalid_argument("embedding dimension must be positive");
    }
    if (values_.size() != ids_.size() * dim_) {
        throw std::invalid_argument("embedding payload has " + std::to_string(values_.size()) + " values, expected " +
                                    std::to_string(ids_.size()) + " x " + std::to_string(dim_));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw StoreError(StoreError::Kind::NonFinite, "non-finite embedding value at (row " +
                                                              std::to_string(i / dim_) + ", col " +
                                                              std::to_string(i % dim_) + ")");
        }
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw StoreError(StoreError::Kind::DuplicateId,
                             "duplicate embedding id " + single_quoted(ids_[i]) + " at row " + std::to_string(i));
        }
    }
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.values_.size() == b.values_.size() &&
           std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
}

EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes, std::string_view source) {
    ByteReader in(bytes, source);
    in.require(4, 8, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw StoreError(StoreError::Kind::BadMagic, std::string(source) + ": bad magic, not an EMB1 file");
    }
    in.text(4);
    in.require(8, 0, "header");
    const std::uint32_t n = in.u32();
    const std::uint32_t p = in.u32();
    if (p == 0) {
        throw StoreError(StoreError::Kind::Malformed, std::string(source) + ": EMB1 header declares dimension 0");
    }

    std::vector<std::string> ids;
    // The header is untrusted; never reserve more than the payload could hold.
    ids.reserve(std::min<std::size_t>(n, in.remaining() / 2));
    std::vector<float> values;
    values.reserve(std::min<std::size_t>(static_cast<std::size_t>(n) * p, in.remaining() / sizeof(float)));
    const std::size_t row_bytes = static_cast<std::size_t>(p) * sizeof(float);

    for (std::uint32_t r = 0; r < n; ++r) {
        // Lower bound on what the remaining records need: each has at least a length prefix and a row.
        const std::size_t rest = static_cast<std::size_t>(n - r - 1) * (2 + row_bytes);
        in.require(2, row_bytes + rest, "id length");
        const std::uint16_t len = in.u16();
        in.require(len, row_bytes + rest, "id");
        ids.push_back(in.text(len));
        in.require(row_bytes, rest, "row values");
        for (std::uint32_t c = 0; c < p; ++c) {
            const float v = in.f32();
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << source << ": non-finite value at (row " << r << ", col " << c << ")";
                throw StoreError(StoreError::Kind::NonFinite, msg.str());
            }
            values.push_back(v);
        }
    }
    if (in.remaining() != 0) {
        throw StoreError(StoreError::Kind::TrailingBytes, std::string(source) + ": " +
                                                              std::to_string(in.remaining()) +
                                                              " trailing bytes after last EMB1 record");
    }
    return EmbeddingMatrix(std::move(ids), p, std::move(values));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError(StoreError::Kind::Io, "cannot open embeddings file " + path.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto bytes = std::as_bytes(std::span<const char>(raw));
    return parse_embeddings(bytes, path.string());
}

std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& matrix) {
    if (matrix.size() > std::numeric_limits<std::uint32_t>::max() ||
        matrix.dim() > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("matrix too large for EMB1");
    }
    std::vector<std::byte> out;
    std::size_t total = kHeaderBytes;
    for (const auto& id : matrix.ids()) {
        total += 2 + id.size() + matrix.dim() * sizeof(float);
    }
    out.reserve(total);
    for (char c : kMagic) {
        out.push_back(static_cast<std::byte>(c));
    }
    put_u32(out, static_cast<std::uint32_t>(matrix.size()));
    put_u32(out, static_cast<std::uint32_t>(matrix.dim()));
    for (std::size_t r = 0; r < matrix.size(); ++r) {
        const auto& id = matrix.id(r);
        if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw std::invalid_argument("embedding id longer than 65535 bytes at row " + std::to_string(r));
        }
        put_u16(out, static_cast<std::uint16_t>(id.size()));
        for (char c : id) {
            out.push_back(static_cast<std::byte>(c));
        }
        for (float v : matrix.row(r)) {
            put_u32(out, std::bit_cast<std::uint32_t>(v));
        }
    }
    return out;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    const auto bytes = serialize_embeddings(matrix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StoreError(StoreError::Kind::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw StoreError(StoreError::Kind::Io, "write failed for " + path.string());
    }
}

void Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) {
        throw StoreError(StoreError::Kind::NegativeGrade, "negative relevance grade for (" + query_id + ", " +
                                                              doc_id + ")");
    }
    by_query_[query_id][doc_id] = grade;
}

int Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
    const auto* docs = judged(query_id);
    if (docs == nullptr) {
        return 0;
    }
    auto it = docs->find(doc_id);
    return it == docs->end() ? 0 : it->second;
}

const Qrels::DocGrades* Qrels::judged(std::string_view query_id) const {
    auto it = by_query_.find(query_id);
    return it == by_query_.end() ? nullptr : &it->second;
}

std::size_t Qrels::size() const noexcept {
    std::size_t n = 0;
    for (const auto& [q, docs] : by_query_) {
        n += docs.size();
    }
    return n;
}

Qrels parse_qrels(std::istream& in) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty()) {
            continue;
        }
        int grade = 0;
        if (fields.size() != 4 || !parse_number(fields[3], grade)) {
            throw StoreError(StoreError::Kind::Malformed,
                             "malformed qrels line " + std::to_string(line_no) + ": " + single_quoted(line));
        }
        if (grade < 0) {
            throw StoreError(StoreError::Kind::NegativeGrade,
                             "negative grade on qrels line " + std::to_string(line_no));
        }
        qrels.set(fields[0], fields[2], grade);
    }
    return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StoreError(StoreError::Kind::Io, "cannot open qrels file " + path.string());
    }
    return parse_qrels(in);
}

void validate_run(const RunRanking& run) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < run.entries.size(); ++i) {
        const auto& e = run.entries[i];
        if (e.rank != i + 1) {
            throw StoreError(StoreError::Kind::InvalidRun, "query " + run.query_id + ": rank " +
                                                               std::to_string(e.rank) + " at position " +
                                                               std::to_string(i + 1));
        }
        if (i > 0 && e.score > run.entries[i - 1].score) {
            throw StoreError(StoreError::Kind::InvalidRun,
                             "query " + run.query_id + ": score increases at rank " + std::to_string(e.rank));
        }
        if (!seen.insert(e.doc_id).second) {
            throw StoreError(StoreError::Kind::InvalidRun,
                             "query " + run.query_id + ": duplicate doc id " + single_quoted(e.doc_id));
        }
    }
}

void write_run(std::ostream& out, std::span<const RunRanking> rankings, const std::string& tag) {
    out << std::fixed << std::setprecision(6);
    for (const auto& run : rankings) {
        validate_run(run);
        for (const auto& e : run.entries) {
            out << run.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << e.score << ' ' << tag << '\n';
        }
    }
}

void write_run(const std::filesystem::path& path, std::span<const RunRanking> rankings, const std::string& tag) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw StoreError(StoreError::Kind::Io, "cannot open " + path.string() + " for writing");
    }
    write_run(out, rankings, tag);
    if (!out) {
        throw StoreError(StoreError::Kind::Io, "write failed for " + path.string());
    }
}

std::vector<RunRanking> parse_run(std::istream& in) {
    std::vector<RunRanking> runs;
    std::unordered_map<std::string, std::size_t> slot;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty()) {
            continue;
        }
        std::size_t rank = 0;
        double score = 0.0;
        if (fields.size() != 6 || !parse_number(fields[3], rank) || !parse_double(fields[4], score)) {
            throw StoreError(StoreError::Kind::Malformed,
                             "malformed run line " + std::to_string(line_no) + ": " + single_quoted(line));
        }
        auto [it, inserted] = slot.emplace(fields[0], runs.size());
        if (inserted) {
            runs.push_back(RunRanking{fields[0], {}, fields[5]});
        }
        runs[it->second].entries.push_back(RunEntry{fields[2], score, rank});
    }
    for (auto& run : runs) {
        std::stable_sort(run.entries.begin(), run.entries.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    }
    return runs;
}

std::vector<RunRanking> load_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StoreError(StoreError::Kind::Io, "cannot open run file " + path.string());
    }
    return parse_run(in);
}

}
