#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace atpo {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(const std::string& text);

/// Minimal RFC-4180 writer: cells containing separators or quotes are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& cells);

private:
    std::ostream& out_;
};

std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace atpo
