#include "floodcast/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "floodcast/errors.hpp"

namespace floodcast::csv {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
        fields.back().pop_back();
    }
    return fields;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + " is empty");
    }
    const auto header = split_line(line);
    if (header != expected_header) {
        std::ostringstream os;
        os << path << ": unexpected header; expected ";
        for (std::size_t i = 0; i < expected_header.size(); ++i) {
            os << (i ? "," : "") << expected_header[i];
        }
        throw DataError(os.str());
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line);
        if (fields.size() != expected_header.size()) {
            throw DataError(path + " row " + std::to_string(rows.size() + 2) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(expected_header.size()));
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

double parse_double(const std::string& text, const std::string& context) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError(context + ": cannot parse '" + text + "' as a number");
    }
    return value;
}

std::int64_t parse_int(const std::string& text, const std::string& context) {
    std::int64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError(context + ": cannot parse '" + text + "' as an integer");
    }
    return value;
}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw Error("format_double failed");
    }
    return std::string(buf, ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + tmp);
        }
        out << content;
        if (!out) {
            throw DataError("write failed for " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw DataError("cannot move " + tmp + " to " + path);
    }
}

}  // namespace floodcast::csv
