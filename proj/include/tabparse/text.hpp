#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tabparse {

/// Shared tokenizer for questions, column names and cell values.
///
/// Lowercases, splits on whitespace and punctuation. A '.' or ',' between
/// two digits is kept so that "21.5" and "1,000" stay single tokens
/// (the comma is dropped: "1,000" -> "1000").
std::vector<std::string> tokenize(std::string_view text);

/// Distinct tokens of `text`.
std::set<std::string> token_set(std::string_view text);

/// Parses a plain decimal number: optional sign, digits (thousands
/// separators allowed in groups of three), optional fractional part.
/// Leading/trailing whitespace is ignored. No units, no dates.
std::optional<double> parse_number(std::string_view text);

/// Canonical answer string: lowercase, trimmed, internal whitespace
/// collapsed, and a purely-zero fractional part dropped from numerics
/// ("21.0" -> "21").
std::string normalize_answer(std::string_view text);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace tabparse
