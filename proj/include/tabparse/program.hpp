#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabparse/table.hpp"

namespace tabparse {

/// An action was applied where the grammar does not allow it, or a
/// precondition of an operation was violated.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProgramParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ActionKind : std::uint8_t {
  SelectColumn,
  FollowUpWhere,
  FpCell,
  CondEquals,
  CondNotEquals,
  CondGreater,
  CondLess,
  CondMax,
  CondMin,
  CondOr,
  Stop,
};

std::string_view kind_name(ActionKind kind);
bool is_head(ActionKind kind);
bool is_condition(ActionKind kind);  // the six atomic condition kinds

struct Action {
  ActionKind kind = ActionKind::Stop;
  std::optional<std::size_t> column;
  std::optional<Cell> value;

  static Action select(std::size_t col) { return {ActionKind::SelectColumn, col, std::nullopt}; }
  static Action follow_up() { return {ActionKind::FollowUpWhere, std::nullopt, std::nullopt}; }
  static Action fp_cell(std::size_t col) { return {ActionKind::FpCell, col, std::nullopt}; }
  static Action condition(ActionKind kind, std::size_t col, std::optional<Cell> value = std::nullopt) {
    return {kind, col, std::move(value)};
  }
  static Action disjunction() { return {ActionKind::CondOr, std::nullopt, std::nullopt}; }
  static Action stop() { return {ActionKind::Stop, std::nullopt, std::nullopt}; }

  friend bool operator==(const Action& a, const Action& b);
  friend std::strong_ordering operator<=>(const Action& a, const Action& b);
};

/// A (possibly incomplete) program: the actions applied so far.
struct ProgramState {
  std::vector<Action> actions;
  bool complete = false;

  std::size_t condition_count() const;
  std::optional<ActionKind> head() const;
};

/// A complete program.
using Program = ProgramState;

/// Canonical text, e.g. `SELECT Club WHERE Losses > 21`,
/// `FOLLOWUP WHERE Bronze IS MAX`, `SELECT Population WHERE Name = China OR Name = USA`,
/// `FPCELL Name`. Incomplete states end in ` ...`. Names and values are
/// double-quoted when they contain spaces or operator characters or
/// collide with a keyword.
std::string serialize(const ProgramState& state, const Table& table);

/// Inverse of `serialize` for the given table.
ProgramState parse_program(std::string_view text, const Table& table);

/// Condition values and heads available for one (table, question, position).
class ActionSpace {
 public:
  ActionSpace(const Table& table, std::size_t position,
              const std::vector<std::string>& question_tokens, std::size_t max_conditions = 2);

  const std::vector<Action>& heads() const { return heads_; }
  /// Atomic conditions: equality/inequality over distinct cell values,
  /// comparisons over numeric cell values and question numbers, extrema.
  const std::vector<Action>& atoms() const { return atoms_; }
  std::size_t max_conditions() const { return max_conditions_; }
  std::size_t position() const { return position_; }

 private:
  std::vector<Action> heads_;
  std::vector<Action> atoms_;
  std::size_t max_conditions_;
  std::size_t position_;
};

/// Actions whose application keeps `state` a valid program prefix.
std::vector<Action> legal_actions(const ProgramState& state, const ActionSpace& space);
std::vector<Action> legal_actions(const ProgramState& state, const Table& table, std::size_t position,
                                  const std::vector<std::string>& question_tokens = {},
                                  std::size_t max_conditions = 2);

/// Appends `action`; throws ContractViolation when the grammar forbids it.
ProgramState apply_action(const ProgramState& state, const Action& action);
ProgramState apply_action(const ProgramState& state, const Action& action, const ActionSpace& space);

/// Structural validity of a complete program for a table and position.
bool is_valid_program(const ProgramState& program, const Table& table, std::size_t position,
                      std::size_t max_conditions = 2);

/// Deterministic execution. Incomplete states execute their completed
/// clauses (a trailing OR is ignored; the empty state yields {}).
AnswerSet execute(const ProgramState& state, const Table& table,
                  const std::optional<AnswerSet>& prev_answer = std::nullopt);

bool uses_previous_answer(const ProgramState& state);

/// Every valid complete program with at most `max_conditions` atomic
/// conditions, built directly from the grammar. Throws once more than
/// `cap` programs would be produced.
std::vector<Program> enumerate_programs(const ActionSpace& space, const Table& table,
                                        std::size_t cap = 200000);

/// True when some row permutation (the swap of the first two rows plus
/// `trials` seeded random permutations) changes the program's answer.
/// Requires the program to reproduce `gold` on the unpermuted table.
bool is_spurious(const Program& program, const Table& table, const AnswerSet& gold,
                 std::size_t trials, std::uint64_t seed,
                 const std::optional<AnswerSet>& prev_answer = std::nullopt);

/// Program keywords present (`SELECT`, `WHERE`, `AND`, `OR`, `FOLLOWUP`,
/// `FPCELL`, `MAX`, `MIN`, `=`, `!=`, `>`, `<`).
std::set<std::string> program_keywords(const ProgramState& state);

/// Distinct non-keyword tokens: tokens of referenced column names and
/// condition values.
std::set<std::string> program_tokens(const ProgramState& state, const Table& table);
std::set<std::string> action_tokens(const Action& action, const Table& table);

/// Canonical keyword spelling ("NotEqual" -> "!=", "max" -> "MAX"); empty
/// when unknown.
std::string canonical_keyword(std::string_view word);

}  // namespace tabparse
