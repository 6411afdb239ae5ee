#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace rdime {

/// Quotes the field when it contains a comma, quote or line break.
std::string csv_field(std::string_view text);

/// Shortest decimal that reads back to the same double.
std::string format_number(double value);

/// Fixed-point with `decimals` digits.
std::string format_fixed(double value, int decimals);

class CsvWriter {
public:
    /// Truncates `path`; throws StoreError(Io) if it cannot be opened.
    explicit CsvWriter(const std::filesystem::path& path);

    void row(const std::vector<std::string>& fields);

    /// Flushes and throws StoreError(Io) if any write failed.
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws StoreError(Malformed) when absent.
    std::size_t column(std::string_view name) const;
};

/// First line is the header; every row must have as many fields.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");

}
