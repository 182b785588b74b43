#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tabparse/critique.hpp"
#include "tabparse/features.hpp"
#include "tabparse/search.hpp"
#include "tabparse/table.hpp"
#include "tabparse/updates.hpp"

namespace tabparse {

/// Raised when training produces a non-finite parameter or update.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 30;
  UpdateSpec update = UpdateSpec::maver();
  SearchConfig search;
  std::uint64_t seed = 1;
  /// Fraction of sequences held out for model selection. With 0 the
  /// training sequences double as the selection set.
  double dev_fraction = 0.2;
  /// Retrain on train+dev for the best epoch count.
  bool refit = false;
  /// Rescale updates whose L2 norm exceeds `clip_norm`.
  bool clip = false;
  double clip_norm = 10.0;
  /// Reward multiplier of the off-policy exploration distribution.
  double exploration_softening = 5.0;
  /// REINFORCE searches with the model policy alone (reward left out of the
  /// beam ranking); the other updates use the reward-ranked search.
  bool on_policy_reinforce = false;
  /// Initial weights are drawn uniformly from [-init_scale, init_scale]
  /// for every feature the training data can produce; 0 starts from zero.
  double init_scale = 0.1;

  /// Search configuration used for training-time candidate generation.
  SearchConfig training_search() const;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double dev_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t updates = 0;
  std::size_t skipped_empty_beam = 0;
  std::size_t skipped_no_compatible = 0;
  std::size_t skipped_no_violation = 0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;

  std::vector<double> dev_accuracies() const;
};

struct TrainResult {
  ParamVector theta;
  TrainHistory history;
  std::vector<std::size_t> train_sequences;  // indices into dataset.sequences
  std::vector<std::size_t> dev_sequences;
};

/// Sequence-level split drawn from `seed`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_sequences(
    std::size_t sequence_count, double dev_fraction, std::uint64_t seed);

/// Seeded initial parameters over every feature id reachable from the
/// given sequences' action spaces.
ParamVector initial_parameters(const Dataset& dataset, std::span<const std::size_t> sequences,
                               std::size_t max_conditions, double scale, std::uint64_t seed);

/// SGD over the generalized update. Returns the parameters of the best dev
/// epoch (or of the refit when enabled).
TrainResult train(const Dataset& dataset, const Lexicon& lexicon, const TrainConfig& config);

struct Prediction {
  std::string sequence_id;
  std::size_t position = 0;
  std::string question;
  std::string program;  // empty when search found nothing
  AnswerSet answer;
  bool correct = false;
};

struct Evaluation {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<Prediction> predictions;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

/// Exact-match evaluation with shaping off. Each question's previous
/// answer is the prediction for the question before it.
Evaluation evaluate_detailed(const Dataset& dataset, std::span<const std::size_t> sequences,
                             const ParamVector& theta, const Lexicon& lexicon,
                             const SearchConfig& search);
double evaluate(const Dataset& dataset, std::span<const std::size_t> sequences,
                const ParamVector& theta, const Lexicon& lexicon, const SearchConfig& search);
double evaluate(const Dataset& dataset, const ParamVector& theta, const Lexicon& lexicon,
                const SearchConfig& search);

/// Mean absolute difference between successive accuracies.
double stability(std::span<const double> accuracies);
double stability(const TrainHistory& history);

struct AuditResult {
  std::size_t spurious = 0;
  std::size_t total = 0;  // sampled examples with a compatible program
  std::size_t sampled = 0;
};

/// Samples examples, searches each with gold rewards under `search`
/// (shaping included when enabled), takes the top-ranked compatible
/// program and counts the spurious ones.
AuditResult spurious_audit(const Dataset& dataset, const ParamVector& theta, const Lexicon& lexicon,
                           const SearchConfig& search, std::size_t sample_size, std::uint64_t seed,
                           std::size_t trials = 10);

struct MetricsReport {
  std::vector<std::pair<std::string, std::string>> config;
  TrainHistory history;
  std::optional<double> stability;
  std::optional<double> test_accuracy;
  std::optional<AuditResult> audit;
};

std::string metrics_json(const MetricsReport& report);
std::string metrics_csv(const TrainHistory& history);

}  // namespace tabparse
