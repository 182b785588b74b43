#include "tabparse/critique.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "default_lexicon.inc"
#include "tabparse/distribution.hpp"
#include "tabparse/text.hpp"

namespace tabparse {

void Lexicon::add(const std::string& token, const std::string& keyword) {
  std::string tok;
  for (const char c : token) tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const std::string kw = canonical_keyword(keyword);
  if (kw.empty()) throw std::invalid_argument("lexicon: unknown program keyword '" + keyword + "'");
  if (tok.empty()) throw std::invalid_argument("lexicon: empty token");
  std::pair<std::string, std::string> p{tok, kw};
  if (std::find(pairs_.begin(), pairs_.end(), p) == pairs_.end()) pairs_.push_back(std::move(p));
}

Lexicon parse_lexicon(const std::string& text) {
  Lexicon lex;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": expected token<TAB>KEYWORD");
    }
    lex.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_lexicon(ss.str());
}

Lexicon default_lexicon() { return parse_lexicon(kDefaultLexicon); }

double match_score(const std::set<std::string>& question, const std::set<std::string>& program_tokens) {
  if (program_tokens.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : program_tokens) hits += question.count(t);
  return static_cast<double>(hits) / static_cast<double>(program_tokens.size());
}

double match_score(const std::set<std::string>& question, const ProgramState& program,
                   const Table& table) {
  return match_score(question, program_tokens(program, table));
}

int co_occur_score(const std::set<std::string>& question, const std::set<std::string>& program_keywords,
                   const Lexicon& lexicon) {
  int n = 0;
  for (const auto& [token, keyword] : lexicon.pairs()) {
    n += question.count(token) && program_keywords.count(keyword);
  }
  return n;
}

int co_occur_score(const std::set<std::string>& question, const ProgramState& program,
                   const Lexicon& lexicon) {
  return co_occur_score(question, program_keywords(program), lexicon);
}

double critique_score(const std::set<std::string>& question, const ProgramState& program,
                      const Table& table, const Lexicon& lexicon) {
  return match_score(question, program, table) + co_occur_score(question, program, lexicon);
}

Eigen::VectorXd critique_policy(std::span<const Program> programs,
                                const std::set<std::string>& question, const Table& table,
                                const Lexicon& lexicon, const ShapingConfig& config) {
  if (programs.empty()) throw std::invalid_argument("critique_policy: empty program list");
  Eigen::VectorXd logits(static_cast<Eigen::Index>(programs.size()));
  for (std::size_t i = 0; i < programs.size(); ++i) {
    logits[static_cast<Eigen::Index>(i)] = config.eta * critique_score(question, programs[i], table, lexicon);
  }
  return softmax(logits);
}

Eigen::VectorXd shape(const Eigen::VectorXd& behavior, const Eigen::VectorXd& critique) {
  if (behavior.size() != critique.size()) {
    throw std::invalid_argument("shape: distributions over different supports");
  }
  const Eigen::VectorXd product = behavior.cwiseProduct(critique);
  const double total = product.sum();
  if (!(total > 0.0)) throw std::domain_error("degenerate shaped policy");
  return product / total;
}

}  // namespace tabparse
