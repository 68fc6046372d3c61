#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace floodcast::csv {

/// Splits one CSV line on commas. No quoting: none of the file formats here
/// carry embedded commas.
std::vector<std::string> split_line(const std::string& line);

/// Reads all rows of a CSV file, validating the header against `expected`.
/// Throws DataError on a missing file or header mismatch.
std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::vector<std::string>& expected_header);

double parse_double(const std::string& text, const std::string& context);
std::int64_t parse_int(const std::string& text, const std::string& context);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Writes text to `path` via a temporary file and rename, so partial output
/// never lands under the final name.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace floodcast::csv
