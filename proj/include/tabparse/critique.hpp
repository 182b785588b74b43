#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabparse/program.hpp"

namespace tabparse {

/// Pairs (question token, program keyword). A pair fires when the token is
/// in the question and the keyword is in the program.
class Lexicon {
 public:
  Lexicon() = default;
  /// Adds a pair; the token is lowercased and the keyword canonicalized.
  /// Duplicates are ignored. Throws on an unknown keyword.
  void add(const std::string& token, const std::string& keyword);
  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
};

/// `token<TAB>KEYWORD` per line, `#` starts a comment.
Lexicon parse_lexicon(const std::string& text);
Lexicon load_lexicon(const std::filesystem::path& path);
/// The built-in 40-pair lexicon of superlatives and comparators.
Lexicon default_lexicon();

/// Fraction of the program's distinct non-keyword tokens present in the
/// question; 0 when the program has none.
double match_score(const std::set<std::string>& question, const ProgramState& program,
                   const Table& table);
double match_score(const std::set<std::string>& question, const std::set<std::string>& program_tokens);

/// Number of lexicon pairs (w, k) with w in the question and k in the program.
int co_occur_score(const std::set<std::string>& question, const ProgramState& program,
                   const Lexicon& lexicon);
int co_occur_score(const std::set<std::string>& question, const std::set<std::string>& program_keywords,
                   const Lexicon& lexicon);

/// match + co_occur
double critique_score(const std::set<std::string>& question, const ProgramState& program,
                      const Table& table, const Lexicon& lexicon);

struct ShapingConfig {
  double eta = 5.0;  // confidence in the critique policy
};

/// p_c(y) ∝ exp(eta * critique(y, x)) over the given programs.
Eigen::VectorXd critique_policy(std::span<const Program> programs,
                                const std::set<std::string>& question, const Table& table,
                                const Lexicon& lexicon, const ShapingConfig& config);

/// Shaped behavior policy: b(y) p_c(y) / sum_y' b(y') p_c(y').
/// Throws std::domain_error("degenerate shaped policy") when every product is zero.
Eigen::VectorXd shape(const Eigen::VectorXd& behavior, const Eigen::VectorXd& critique);

}  // namespace tabparse
