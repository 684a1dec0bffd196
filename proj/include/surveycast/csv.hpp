#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace surveycast {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const;
};

// Reads a comma-separated table with a mandatory header row. Supports
// double-quoted fields with "" escapes. Throws DataError on a missing
// header or on a row whose field count differs from the header.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

// Splits one CSV line into fields (quote-aware).
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field if it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

// Shortest round-trip decimal representation ("inf" / "-inf" / "nan" for
// non-finite values).
std::string format_double(double v);

// Strict double parse of a whole field; nullopt if not a valid number.
std::optional<double> parse_double(const std::string& s);
std::optional<long long> parse_int(const std::string& s);

} // namespace surveycast
