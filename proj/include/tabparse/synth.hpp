#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabparse/table.hpp"

namespace tabparse {

struct SynthConfig {
  std::size_t sequences = 50;
  std::uint64_t seed = 7;
  std::size_t rows = 5;
  /// Probability that a superlative question's answer row is moved to the
  /// top of its table, so that index-based programs also fit the answer.
  double planted_fraction = 0.5;
  /// Condition budget used when counting compatible programs.
  std::size_t max_conditions = 1;
};

struct SynthCorpus {
  Dataset dataset;
  /// Gold program serializations, parallel to dataset.sequences[i].examples.
  std::vector<std::vector<std::string>> gold_programs;
  /// Share of examples with at least two compatible programs.
  double multi_compatible_fraction = 0.0;
};

/// Sports-league tables (Index, Team, Nation, Points, Wins) with question
/// sequences built from templates: superlatives, comparisons, negations,
/// follow-ups and single-cell lookups. Deterministic in the seed.
SynthCorpus synthesize(const SynthConfig& config);

}  // namespace tabparse
