#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabparse/critique.hpp"
#include "tabparse/features.hpp"
#include "tabparse/program.hpp"
#include "tabparse/table.hpp"

namespace tabparse {

struct SearchConfig {
  std::size_t beam_size = 32;
  std::size_t max_actions = 6;
  std::size_t max_conditions = 2;
  /// true: rank by reward first, model score breaks ties. false: rank by
  /// lambda * reward + score.
  bool lambda_infinite = true;
  double lambda = 0.0;
  /// Policy shaping: add eta * critique to the ranking score.
  bool shaping_enabled = false;
  double eta = 5.0;
  /// Model shaping ablation: eta * critique becomes part of the model score.
  bool model_shaping = false;

  void validate() const;
};

struct Candidate {
  Program program;
  std::string serialization;
  FeatureVector features;
  double score = 0.0;     // model score (includes eta * critique only under model shaping)
  double reward = 0.0;    // Jaccard against the gold answer, 0 without gold
  double critique = 0.0;  // match + co_occur
  bool compatible = false;
  AnswerSet answer;
};

/// Completed programs found by one search, in final beam order.
struct CandidateSet {
  std::vector<Candidate> programs;
  std::vector<std::size_t> compatible;  // indices into `programs`

  bool empty() const { return programs.empty(); }
  std::size_t size() const { return programs.size(); }
};

/// Beam ordering key. Higher `primary`, then higher `secondary`, then the
/// smaller serialization ranks first.
struct RankKey {
  double primary = 0.0;
  double secondary = 0.0;
  std::string serialization;
};

bool ranks_before(const RankKey& a, const RankKey& b);

RankKey rank_key(const std::string& serialization, double reward, double score, double critique,
                 const SearchConfig& config);

struct SearchInputs {
  /// Answer of the previous question in the sequence (gold at training,
  /// predicted at evaluation). FollowUp/FpCell heads need it.
  std::optional<AnswerSet> prev_answer;
  /// Whether the gold answer drives rewards. Off at inference.
  bool use_gold = true;
};

/// Beam search over program states. Each step expands every beam state by
/// its legal actions. Completed children go straight into the candidate
/// set; the unfinished ones are ranked with `rank_key` (partial-program
/// reward from partial execution) and the top `beam_size` form the next beam.
CandidateSet beam_search(const Example& example, const Table& table, const ParamVector& theta,
                         const Lexicon& lexicon, const SearchConfig& config,
                         const SearchInputs& inputs = {});

/// One JSON object describing the final beam of an example.
std::string beam_dump_line(const Example& example, const CandidateSet& candidates);

}  // namespace tabparse
