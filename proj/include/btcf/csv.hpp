#pragma once

// Minimal comma-separated text helpers shared by every file format in the
// toolkit. Fields containing a comma, quote or newline are double-quoted with
// embedded quotes doubled.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace btcf::csv {

using Row = std::vector<std::string>;

/// Splits one line into fields, honouring double-quoted fields.
Row split_line(std::string_view line);

/// Joins fields into one line (no trailing newline), quoting where required.
std::string join_line(const Row& fields);

/// Quotes a single field if it needs quoting.
std::string escape(std::string_view field);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Strict parse: the whole of `text` must be a finite-or-not decimal number.
std::optional<double> parse_number(std::string_view text);

std::optional<std::int64_t> parse_integer(std::string_view text);

/// Reads every non-empty line of a file, stripping a trailing CR. Throws
/// DataError naming the path when it cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// A parsed table: header plus data rows, every row checked to have the
/// header's width.
struct Table {
    Row header;
    std::vector<Row> rows;

    /// Index of a header column, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

Table read_table(const std::filesystem::path& path);

void write_table(const std::filesystem::path& path, const Table& table);

}  // namespace btcf::csv
