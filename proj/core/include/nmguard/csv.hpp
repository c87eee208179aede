#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small helpers shared by the CSV readers and writers.
namespace nmguard::csv {

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Parses a finite or non-finite double; returns false on garbage.
bool parse_double(std::string_view text, double& out);

/// Shortest representation that round-trips exactly.
std::string format_exact(double value);

/// printf-style %.<digits>g.
std::string format_sig(double value, int digits);

/// Strips a trailing '\r' left by CRLF files.
std::string_view chomp(std::string_view line);

}  // namespace nmguard::csv
