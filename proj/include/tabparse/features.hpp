#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tabparse/program.hpp"
#include "tabparse/table.hpp"

namespace tabparse {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse feature vector keyed by explicit feature ids. Zero entries are
/// never stored.
class FeatureVector {
 public:
  void add(const std::string& id, double value);
  double get(const std::string& id) const;
  const std::map<std::string, double>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  FeatureVector& operator+=(const FeatureVector& other);
  FeatureVector& operator-=(const FeatureVector& other);
  FeatureVector scaled(double factor) const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::map<std::string, double> entries_;
};

/// Model weights. Non-finite values are rejected.
class ParamVector {
 public:
  double get(const std::string& id) const;
  void set(const std::string& id, double value);
  /// theta += scale * delta
  void add_scaled(const FeatureVector& delta, double scale);
  double dot(const FeatureVector& features) const;
  std::size_t size() const { return weights_.size(); }
  std::map<std::string, double> sorted() const { return {weights_.begin(), weights_.end()}; }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::unordered_map<std::string, double> weights_;
};

/// Per-(question, table, position) featurization state.
///
/// Per-action features:
///   kind:<Kind>                 action-kind indicator
///   q:<token>|<Kind>            question token conjoined with the kind
///   head.col_exact / cond.col_exact      every column-name token is in the question
///   head.col_overlap / cond.col_overlap  some column-name token is in the question
///   head.rel_col / cond.rel_col          some question token occurs in the column's cells
///   cond.val_exact / cond.val_overlap    same tests for a condition's value
/// Program-level feature:
///   recall                      |E1 - E2| / |E1|, E1 = question tokens found in the
///                               table, E2 = the program's non-keyword tokens
class FeatureContext {
 public:
  FeatureContext(const std::vector<std::string>& question_tokens, const Table& table,
                 std::size_t position);

  FeatureVector action_features(const Action& action) const;
  /// The recall feature value for a program with these non-keyword tokens.
  double recall(const std::set<std::string>& program_tokens) const;
  FeatureVector featurize(const ProgramState& state) const;

  const std::set<std::string>& question_tokens() const { return question_; }
  const std::set<std::string>& question_table_tokens() const { return question_in_table_; }
  const Table& table() const { return table_; }
  std::size_t position() const { return position_; }

 private:
  std::set<std::string> question_;
  std::set<std::string> question_in_table_;
  std::vector<std::set<std::string>> column_name_tokens_;
  std::vector<std::set<std::string>> column_cell_tokens_;
  const Table& table_;
  std::size_t position_;
};

FeatureVector featurize(const ProgramState& state, const std::vector<std::string>& question_tokens,
                        const Table& table, std::size_t position);

/// theta . featurize(...)
double score(const ProgramState& program, const std::vector<std::string>& question_tokens,
             const Table& table, std::size_t position, const ParamVector& theta);

/// Gradient of `score` with respect to theta; equals the features.
FeatureVector score_gradient(const ProgramState& program,
                             const std::vector<std::string>& question_tokens, const Table& table,
                             std::size_t position, const ParamVector& theta);

/// Boltzmann policy p(y) ∝ exp(score(y)) over a finite program list.
Eigen::VectorXd boltzmann(std::span<const Program> programs,
                          const std::vector<std::string>& question_tokens, const Table& table,
                          std::size_t position, const ParamVector& theta);

/// Dense |K| x d view of a list of feature vectors over their joint ids.
struct FeatureMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd rows;

  static FeatureMatrix from(std::span<const FeatureVector> features);
  Eigen::VectorXd weights(const ParamVector& theta) const;
  FeatureVector to_features(const Eigen::VectorXd& coefficients) const;
};

/// Checkpoint: `feature_id<TAB>weight` lines sorted by feature id.
void write_checkpoint(const ParamVector& theta, std::ostream& out);
void write_checkpoint(const ParamVector& theta, const std::filesystem::path& path);
ParamVector read_checkpoint(std::istream& in);
ParamVector read_checkpoint(const std::filesystem::path& path);

/// True for ids this featurizer can emit.
bool is_known_feature_id(const std::string& id);

}  // namespace tabparse
