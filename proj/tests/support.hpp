#pragma once

// Fixtures and independent reference implementations shared by the unit
// tests and the acceptance runner.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tabparse/features.hpp"
#include "tabparse/program.hpp"
#include "tabparse/search.hpp"
#include "tabparse/table.hpp"

namespace tabparse::testing {

/// Seven-row rugby table: Karen Andrew (England) has the most points.
Table rugby_table();

/// rugby_table() with a positional Index column in front.
Table indexed_rugby_table();

/// Club/Losses toy table with Losses 25, 21, 10.
Table club_table();

Example make_example(const std::string& question, const AnswerSet& gold, std::size_t position = 0,
                     const std::string& table_ref = "t.csv");

/// Random table with small integer and short text cells. Columns are
/// drawn from a fixed name pool; `numeric_bias` is the chance that a
/// column is numeric.
Table random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double numeric_bias = 0.5);

/// Candidate set built straight from a program list (no search).
CandidateSet candidates_from(const std::vector<Program>& programs, const Example& example,
                             const Table& table, const std::optional<AnswerSet>& prev = std::nullopt);

/// Row-by-row reference interpreter, written independently of `execute`.
AnswerSet interpret(const Program& program, const Table& table,
                    const std::optional<AnswerSet>& prev = std::nullopt);

/// Random weights over the given ids, uniform in [-scale, scale].
ParamVector random_theta(std::mt19937_64& rng, const std::vector<std::string>& ids, double scale);

/// Ids of every feature present in a candidate set.
std::vector<std::string> feature_ids(const CandidateSet& candidates);

}  // namespace tabparse::testing
