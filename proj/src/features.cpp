#include "tabparse/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tabparse/distribution.hpp"
#include "tabparse/text.hpp"

namespace tabparse {

// ---------------------------------------------------------------------------
// FeatureVector / ParamVector

void FeatureVector::add(const std::string& id, double value) {
  if (value == 0.0) return;
  auto [it, inserted] = entries_.try_emplace(id, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  }
}

double FeatureVector::get(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? 0.0 : it->second;
}

FeatureVector& FeatureVector::operator+=(const FeatureVector& other) {
  for (const auto& [id, v] : other.entries_) add(id, v);
  return *this;
}

FeatureVector& FeatureVector::operator-=(const FeatureVector& other) {
  for (const auto& [id, v] : other.entries_) add(id, -v);
  return *this;
}

FeatureVector FeatureVector::scaled(double factor) const {
  FeatureVector out;
  for (const auto& [id, v] : entries_) out.add(id, v * factor);
  return out;
}

double ParamVector::get(const std::string& id) const {
  const auto it = weights_.find(id);
  return it == weights_.end() ? 0.0 : it->second;
}

void ParamVector::set(const std::string& id, double value) {
  if (!std::isfinite(value)) throw std::domain_error("non-finite weight for feature '" + id + "'");
  if (value == 0.0) {
    weights_.erase(id);
  } else {
    weights_[id] = value;
  }
}

void ParamVector::add_scaled(const FeatureVector& delta, double scale) {
  for (const auto& [id, v] : delta.entries()) {
    if (!std::isfinite(v * scale)) throw std::domain_error("non-finite update for feature '" + id + "'");
  }
  for (const auto& [id, v] : delta.entries()) set(id, get(id) + scale * v);
}

double ParamVector::dot(const FeatureVector& features) const {
  double s = 0.0;
  for (const auto& [id, v] : features.entries()) {
    const auto it = weights_.find(id);
    if (it != weights_.end()) s += it->second * v;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Featurization

namespace {

bool all_in(const std::set<std::string>& needles, const std::set<std::string>& hay) {
  return !needles.empty() &&
         std::all_of(needles.begin(), needles.end(), [&](const auto& t) { return hay.count(t) > 0; });
}

bool any_in(const std::set<std::string>& needles, const std::set<std::string>& hay) {
  return std::any_of(needles.begin(), needles.end(), [&](const auto& t) { return hay.count(t) > 0; });
}

}  // namespace

FeatureContext::FeatureContext(const std::vector<std::string>& question_tokens, const Table& table,
                               std::size_t position)
    : question_(question_tokens.begin(), question_tokens.end()), table_(table), position_(position) {
  std::set<std::string> table_tokens;
  column_name_tokens_.resize(table.col_count());
  column_cell_tokens_.resize(table.col_count());
  for (std::size_t c = 0; c < table.col_count(); ++c) {
    column_name_tokens_[c] = token_set(table.column_names()[c]);
    table_tokens.insert(column_name_tokens_[c].begin(), column_name_tokens_[c].end());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      for (auto& t : tokenize(table.cell(r, c).raw)) column_cell_tokens_[c].insert(std::move(t));
    }
    table_tokens.insert(column_cell_tokens_[c].begin(), column_cell_tokens_[c].end());
  }
  for (const auto& t : question_) {
    if (table_tokens.count(t)) question_in_table_.insert(t);
  }
}

FeatureVector FeatureContext::action_features(const Action& action) const {
  FeatureVector f;
  const std::string kind(kind_name(action.kind));
  f.add("kind:" + kind, 1.0);
  if (action.kind == ActionKind::Stop) return f;
  for (const auto& t : question_) f.add("q:" + t + "|" + kind, 1.0);

  if (action.column && *action.column < table_.col_count()) {
    const std::string role = is_head(action.kind) ? "head." : "cond.";
    const auto& name = column_name_tokens_[*action.column];
    if (all_in(name, question_)) f.add(role + "col_exact", 1.0);
    if (any_in(name, question_)) f.add(role + "col_overlap", 1.0);
    if (any_in(question_, column_cell_tokens_[*action.column])) f.add(role + "rel_col", 1.0);
  }
  if (action.value) {
    const auto value = token_set(action.value->raw);
    if (all_in(value, question_)) f.add("cond.val_exact", 1.0);
    if (any_in(value, question_)) f.add("cond.val_overlap", 1.0);
  }
  return f;
}

double FeatureContext::recall(const std::set<std::string>& program_tokens) const {
  if (question_in_table_.empty()) return 0.0;
  std::size_t uncovered = 0;
  for (const auto& t : question_in_table_) uncovered += program_tokens.count(t) == 0;
  return static_cast<double>(uncovered) / static_cast<double>(question_in_table_.size());
}

FeatureVector FeatureContext::featurize(const ProgramState& state) const {
  FeatureVector f;
  for (const auto& a : state.actions) f += action_features(a);
  f.add("recall", recall(program_tokens(state, table_)));
  return f;
}

FeatureVector featurize(const ProgramState& state, const std::vector<std::string>& question_tokens,
                        const Table& table, std::size_t position) {
  return FeatureContext(question_tokens, table, position).featurize(state);
}

double score(const ProgramState& program, const std::vector<std::string>& question_tokens,
             const Table& table, std::size_t position, const ParamVector& theta) {
  return theta.dot(featurize(program, question_tokens, table, position));
}

FeatureVector score_gradient(const ProgramState& program,
                             const std::vector<std::string>& question_tokens, const Table& table,
                             std::size_t position, const ParamVector& /*theta*/) {
  return featurize(program, question_tokens, table, position);
}

Eigen::VectorXd boltzmann(std::span<const Program> programs,
                          const std::vector<std::string>& question_tokens, const Table& table,
                          std::size_t position, const ParamVector& theta) {
  if (programs.empty()) throw std::invalid_argument("boltzmann: empty program list");
  const FeatureContext ctx(question_tokens, table, position);
  Eigen::VectorXd scores(static_cast<Eigen::Index>(programs.size()));
  for (std::size_t i = 0; i < programs.size(); ++i) {
    scores[static_cast<Eigen::Index>(i)] = theta.dot(ctx.featurize(programs[i]));
  }
  return softmax(scores);
}

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix FeatureMatrix::from(std::span<const FeatureVector> features) {
  FeatureMatrix m;
  std::map<std::string, Eigen::Index> column;
  for (const auto& fv : features) {
    for (const auto& [id, v] : fv.entries()) column.try_emplace(id, 0);
  }
  Eigen::Index next = 0;
  for (auto& [id, idx] : column) {
    idx = next++;
    m.ids.push_back(id);
  }
  m.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(features.size()), next);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (const auto& [id, v] : features[i].entries()) {
      m.rows(static_cast<Eigen::Index>(i), column.at(id)) = v;
    }
  }
  return m;
}

Eigen::VectorXd FeatureMatrix::weights(const ParamVector& theta) const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) w[static_cast<Eigen::Index>(j)] = theta.get(ids[j]);
  return w;
}

FeatureVector FeatureMatrix::to_features(const Eigen::VectorXd& coefficients) const {
  FeatureVector f;
  for (std::size_t j = 0; j < ids.size(); ++j) f.add(ids[j], coefficients[static_cast<Eigen::Index>(j)]);
  return f;
}

// ---------------------------------------------------------------------------
// Checkpoints

bool is_known_feature_id(const std::string& id) {
  if (id == "recall") return true;
  static const std::set<std::string> plain = {
      "head.col_exact", "head.col_overlap", "head.rel_col", "cond.col_exact",
      "cond.col_overlap", "cond.rel_col",   "cond.val_exact", "cond.val_overlap"};
  if (plain.count(id)) return true;
  auto known_kind = [](std::string_view k) {
    for (int i = 0; i <= static_cast<int>(ActionKind::Stop); ++i) {
      if (kind_name(static_cast<ActionKind>(i)) == k) return true;
    }
    return false;
  };
  if (id.rfind("kind:", 0) == 0) return known_kind(std::string_view(id).substr(5));
  if (id.rfind("q:", 0) == 0) {
    const auto bar = id.rfind('|');
    return bar != std::string::npos && bar > 2 && known_kind(std::string_view(id).substr(bar + 1));
  }
  return false;
}

void write_checkpoint(const ParamVector& theta, std::ostream& out) {
  for (const auto& [id, w] : theta.sorted()) out << id << '\t' << format_double(w) << '\n';
}

void write_checkpoint(const ParamVector& theta, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  write_checkpoint(theta, out);
}

ParamVector read_checkpoint(std::istream& in) {
  ParamVector theta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw CheckpointError("checkpoint line " + std::to_string(line_no) + ": expected id<TAB>weight");
    }
    const std::string id = line.substr(0, tab);
    const std::string text = line.substr(tab + 1);
    if (!is_known_feature_id(id)) {
      throw CheckpointError("checkpoint line " + std::to_string(line_no) +
                            ": feature mismatch, unknown feature id '" + id + "'");
    }
    double w = 0.0;
    std::size_t used = 0;
    try {
      w = std::stod(text, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(w)) {
      throw CheckpointError("checkpoint line " + std::to_string(line_no) + ": bad weight '" + text + "'");
    }
    theta.set(id, w);
  }
  return theta;
}

ParamVector read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

}  // namespace tabparse
