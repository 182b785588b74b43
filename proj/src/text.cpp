#include "tabparse/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace tabparse {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_alnum(c) || (static_cast<unsigned char>(c) >= 0x80)) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      continue;
    }
    const bool between_digits = !current.empty() && is_digit(current.back()) &&
                                i + 1 < text.size() && is_digit(text[i + 1]);
    if (between_digits && c == '.') {
      current.push_back('.');
      continue;
    }
    if (between_digits && c == ',') continue;
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::set<std::string> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return {tokens.begin(), tokens.end()};
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;

  std::string digits;
  std::size_t i = 0;
  if (text[0] == '+' || text[0] == '-') {
    if (text[0] == '-') digits.push_back('-');
    ++i;
  }

  // Integer part, with optional thousands separators.
  const std::size_t int_start = i;
  bool has_commas = false;
  std::size_t group_len = 0;
  bool first_group = true;
  for (; i < text.size() && (is_digit(text[i]) || text[i] == ','); ++i) {
    if (text[i] == ',') {
      if (group_len == 0 || (first_group && group_len > 3) || (!first_group && group_len != 3)) {
        return std::nullopt;
      }
      has_commas = true;
      first_group = false;
      group_len = 0;
      continue;
    }
    digits.push_back(text[i]);
    ++group_len;
  }
  if (i == int_start || group_len == 0) return std::nullopt;
  if (has_commas && group_len != 3) return std::nullopt;

  if (i < text.size() && text[i] == '.') {
    digits.push_back('.');
    ++i;
    const std::size_t frac_start = i;
    for (; i < text.size() && is_digit(text[i]); ++i) digits.push_back(text[i]);
    if (i == frac_start) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;

  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string normalize_answer(std::string_view text) {
  text = trim(text);
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char c : text) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (parse_number(out)) {
    const auto dot = out.find('.');
    if (dot != std::string::npos && out.find_first_not_of('0', dot + 1) == std::string::npos) {
      out.erase(dot);
      if (out == "-0") out = "0";
    }
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, ptr};
}

}  // namespace tabparse
