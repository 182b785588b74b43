#include "tabparse/program.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>

#include "tabparse/text.hpp"

namespace tabparse {

std::string_view kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::SelectColumn: return "SelectColumn";
    case ActionKind::FollowUpWhere: return "FollowUpWhere";
    case ActionKind::FpCell: return "FpCell";
    case ActionKind::CondEquals: return "CondEquals";
    case ActionKind::CondNotEquals: return "CondNotEquals";
    case ActionKind::CondGreater: return "CondGreater";
    case ActionKind::CondLess: return "CondLess";
    case ActionKind::CondMax: return "CondMax";
    case ActionKind::CondMin: return "CondMin";
    case ActionKind::CondOr: return "CondOr";
    case ActionKind::Stop: return "Stop";
  }
  return "?";
}

bool is_head(ActionKind kind) {
  return kind == ActionKind::SelectColumn || kind == ActionKind::FollowUpWhere ||
         kind == ActionKind::FpCell;
}

bool is_condition(ActionKind kind) {
  switch (kind) {
    case ActionKind::CondEquals:
    case ActionKind::CondNotEquals:
    case ActionKind::CondGreater:
    case ActionKind::CondLess:
    case ActionKind::CondMax:
    case ActionKind::CondMin: return true;
    default: return false;
  }
}

bool operator==(const Action& a, const Action& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Action& a, const Action& b) {
  if (auto c = a.kind <=> b.kind; c != 0) return c;
  if (auto c = a.column <=> b.column; c != 0) return c;
  if (a.value.has_value() != b.value.has_value()) return a.value.has_value() <=> b.value.has_value();
  if (!a.value) return std::strong_ordering::equal;
  return a.value->raw <=> b.value->raw;
}

std::size_t ProgramState::condition_count() const {
  return static_cast<std::size_t>(std::count_if(
      actions.begin(), actions.end(), [](const Action& a) { return is_condition(a.kind); }));
}

std::optional<ActionKind> ProgramState::head() const {
  if (actions.empty()) return std::nullopt;
  return actions.front().kind;
}

// ---------------------------------------------------------------------------
// Grammar

namespace {

struct Shape {
  std::optional<ActionKind> head;
  std::size_t atoms = 0;
  bool after_or = false;       // last action is CondOr
  bool last_in_or = false;     // last atom closed a disjunction
  bool complete = false;
};

struct NextSet {
  bool atom = false;
  bool disjunction = false;
  bool stop = false;
};

/// Follows the grammar through `actions`; nullopt when it is violated.
std::optional<Shape> trace(const std::vector<Action>& actions) {
  Shape s;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Action& a = actions[i];
    if (s.complete) return std::nullopt;
    if (i == 0) {
      if (!is_head(a.kind)) return std::nullopt;
      if ((a.kind == ActionKind::FollowUpWhere) == a.column.has_value()) return std::nullopt;
      s.head = a.kind;
      continue;
    }
    if (is_head(a.kind)) return std::nullopt;
    const Action& prev = actions[i - 1];
    switch (a.kind) {
      case ActionKind::Stop:
        if (s.after_or || (*s.head == ActionKind::FollowUpWhere && s.atoms == 0)) return std::nullopt;
        s.complete = true;
        break;
      case ActionKind::CondOr:
        if (!is_condition(prev.kind) || s.last_in_or) return std::nullopt;
        s.after_or = true;
        break;
      default:
        if (!is_condition(a.kind) || *s.head == ActionKind::FpCell) return std::nullopt;
        if (!a.column) return std::nullopt;
        {
          const bool needs_value = a.kind != ActionKind::CondMax && a.kind != ActionKind::CondMin;
          if (needs_value != a.value.has_value()) return std::nullopt;
          if ((a.kind == ActionKind::CondGreater || a.kind == ActionKind::CondLess) && !a.value->numeric) {
            return std::nullopt;
          }
        }
        s.last_in_or = s.after_or;
        s.after_or = false;
        ++s.atoms;
        break;
    }
  }
  return s;
}

NextSet next_set(const Shape& s) {
  NextSet n;
  if (s.complete) return n;
  if (!s.head) return n;
  if (s.after_or) {
    n.atom = true;
    return n;
  }
  switch (*s.head) {
    case ActionKind::FpCell: n.stop = true; return n;
    case ActionKind::FollowUpWhere: n.atom = true; n.stop = s.atoms > 0; break;
    default: n.atom = true; n.stop = true; break;
  }
  n.disjunction = s.atoms > 0 && !s.last_in_or;
  return n;
}

}  // namespace

ActionSpace::ActionSpace(const Table& table, std::size_t position,
                         const std::vector<std::string>& question_tokens, std::size_t max_conditions)
    : max_conditions_(max_conditions), position_(position) {
  for (std::size_t c = 0; c < table.col_count(); ++c) heads_.push_back(Action::select(c));
  if (position > 0) {
    if (max_conditions > 0) heads_.push_back(Action::follow_up());
    for (std::size_t c = 0; c < table.col_count(); ++c) heads_.push_back(Action::fp_cell(c));
  }

  std::vector<Cell> question_numbers;
  for (const auto& tok : question_tokens) {
    if (parse_number(tok)) question_numbers.push_back(Cell::from_raw(tok));
  }

  for (std::size_t c = 0; c < table.col_count(); ++c) {
    std::vector<Cell> values;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      const auto& norm = table.normalized(r, c);
      if (norm.empty() || !seen.insert(norm).second) continue;
      values.push_back(table.cell(r, c));
    }
    for (const auto& v : values) atoms_.push_back(Action::condition(ActionKind::CondEquals, c, v));
    for (const auto& v : values) atoms_.push_back(Action::condition(ActionKind::CondNotEquals, c, v));
    if (!table.column_has_numeric(c)) continue;

    std::vector<Cell> numbers;
    std::vector<double> seen_numbers;
    auto add_number = [&](const Cell& cell) {
      if (!cell.numeric) return;
      if (std::find(seen_numbers.begin(), seen_numbers.end(), *cell.numeric) != seen_numbers.end()) return;
      seen_numbers.push_back(*cell.numeric);
      numbers.push_back(cell);
    };
    for (std::size_t r = 0; r < table.row_count(); ++r) add_number(table.cell(r, c));
    for (const auto& q : question_numbers) add_number(q);
    for (const auto& n : numbers) atoms_.push_back(Action::condition(ActionKind::CondGreater, c, n));
    for (const auto& n : numbers) atoms_.push_back(Action::condition(ActionKind::CondLess, c, n));
    atoms_.push_back(Action::condition(ActionKind::CondMax, c));
    atoms_.push_back(Action::condition(ActionKind::CondMin, c));
  }
}

std::vector<Action> legal_actions(const ProgramState& state, const ActionSpace& space) {
  if (state.complete) return {};
  if (state.actions.empty()) return space.heads();
  const auto shape = trace(state.actions);
  if (!shape) throw ContractViolation("legal_actions: state is not a valid program prefix");
  const NextSet next = next_set(*shape);
  const bool room = shape->atoms < space.max_conditions();

  std::vector<Action> out;
  if (next.atom && room) out = space.atoms();
  // a disjunction needs room for its right-hand atom
  if (next.disjunction && room) out.push_back(Action::disjunction());
  if (next.stop) out.push_back(Action::stop());
  return out;
}

std::vector<Action> legal_actions(const ProgramState& state, const Table& table, std::size_t position,
                                  const std::vector<std::string>& question_tokens,
                                  std::size_t max_conditions) {
  return legal_actions(state, ActionSpace(table, position, question_tokens, max_conditions));
}

ProgramState apply_action(const ProgramState& state, const Action& action) {
  if (state.complete) throw ContractViolation("apply_action: program is already complete");
  ProgramState next = state;
  next.actions.push_back(action);
  const auto shape = trace(next.actions);
  if (!shape) {
    throw ContractViolation("apply_action: " + std::string(kind_name(action.kind)) +
                            " is not legal here");
  }
  next.complete = shape->complete;
  return next;
}

ProgramState apply_action(const ProgramState& state, const Action& action, const ActionSpace& space) {
  const auto legal = legal_actions(state, space);
  if (std::find(legal.begin(), legal.end(), action) == legal.end()) {
    throw ContractViolation("apply_action: " + std::string(kind_name(action.kind)) +
                            " is not among the legal actions");
  }
  return apply_action(state, action);
}

bool is_valid_program(const ProgramState& program, const Table& table, std::size_t position,
                      std::size_t max_conditions) {
  const auto shape = trace(program.actions);
  if (!shape || !shape->complete || !program.complete) return false;
  if (shape->atoms > max_conditions) return false;
  if (position == 0 && *shape->head != ActionKind::SelectColumn) return false;
  for (const auto& a : program.actions) {
    if (a.column && *a.column >= table.col_count()) return false;
    if ((a.kind == ActionKind::CondGreater || a.kind == ActionKind::CondLess ||
         a.kind == ActionKind::CondMax || a.kind == ActionKind::CondMin) &&
        !table.column_has_numeric(*a.column)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Execution

bool uses_previous_answer(const ProgramState& state) {
  return !state.actions.empty() && (state.actions.front().kind == ActionKind::FollowUpWhere ||
                                    state.actions.front().kind == ActionKind::FpCell);
}

namespace {

using RowMask = std::vector<char>;

RowMask filter(const Table& table, const RowMask& rows, const Action& atom) {
  const std::size_t c = *atom.column;
  RowMask out(rows.size(), 0);
  switch (atom.kind) {
    case ActionKind::CondEquals:
    case ActionKind::CondNotEquals: {
      const std::string target = normalize_answer(atom.value->raw);
      const auto target_num = atom.value->numeric;
      const bool want = atom.kind == ActionKind::CondEquals;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r]) continue;
        const auto& cell_num = table.cell(r, c).numeric;
        const bool eq = table.normalized(r, c) == target ||
                        (cell_num && target_num && *cell_num == *target_num);
        out[r] = eq == want;
      }
      break;
    }
    case ActionKind::CondGreater:
    case ActionKind::CondLess: {
      if (!atom.value->numeric) break;
      const double v = *atom.value->numeric;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& n = table.cell(r, c).numeric;
        if (!rows[r] || !n) continue;
        out[r] = atom.kind == ActionKind::CondGreater ? *n > v : *n < v;
      }
      break;
    }
    case ActionKind::CondMax:
    case ActionKind::CondMin: {
      std::optional<double> best;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& n = table.cell(r, c).numeric;
        if (!rows[r] || !n) continue;
        if (!best || (atom.kind == ActionKind::CondMax ? *n > *best : *n < *best)) best = *n;
      }
      if (!best) break;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& n = table.cell(r, c).numeric;
        out[r] = rows[r] && n && *n == *best;
      }
      break;
    }
    default: throw ContractViolation("filter: not a condition");
  }
  return out;
}

std::set<CellCoord> resolve_cells(const AnswerSet& answer, const Table& table) {
  std::set<CellCoord> cells;
  if (!answer.cells.empty()) {
    for (const auto& rc : answer.cells) {
      if (rc.first < table.row_count() && rc.second < table.col_count()) cells.insert(rc);
    }
    return cells;
  }
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      if (answer.values.count(table.normalized(r, c))) cells.insert({r, c});
    }
  }
  return cells;
}

}  // namespace

AnswerSet execute(const ProgramState& state, const Table& table,
                  const std::optional<AnswerSet>& prev_answer) {
  AnswerSet out;
  if (state.actions.empty()) return out;
  const Action& head = state.actions.front();
  const std::size_t n = table.row_count();

  std::set<CellCoord> prev_cells;
  RowMask rows(n, 1);
  if (head.kind == ActionKind::FollowUpWhere || head.kind == ActionKind::FpCell) {
    if (!prev_answer) {
      throw ExecutionError(std::string(kind_name(head.kind)) + " needs the previous answer");
    }
    prev_cells = resolve_cells(*prev_answer, table);
    rows.assign(n, 0);
    for (const auto& rc : prev_cells) rows[rc.first] = 1;
  }

  if (head.kind == ActionKind::FpCell) {
    if (prev_answer->values.size() != 1) return out;
    for (std::size_t r = 0; r < n; ++r) {
      if (!rows[r]) continue;
      out.values.insert(table.normalized(r, *head.column));
      out.cells.insert({r, *head.column});
    }
    return out;
  }

  const auto& acts = state.actions;
  for (std::size_t i = 1; i < acts.size(); ++i) {
    if (!is_condition(acts[i].kind)) continue;
    RowMask kept = filter(table, rows, acts[i]);
    if (i + 2 < acts.size() && acts[i + 1].kind == ActionKind::CondOr) {
      const RowMask other = filter(table, rows, acts[i + 2]);
      for (std::size_t r = 0; r < n; ++r) kept[r] = kept[r] || other[r];
      i += 2;
    }
    rows = std::move(kept);
  }

  if (head.kind == ActionKind::SelectColumn) {
    for (std::size_t r = 0; r < n; ++r) {
      if (!rows[r]) continue;
      out.values.insert(table.normalized(r, *head.column));
      out.cells.insert({r, *head.column});
    }
  } else {
    for (const auto& rc : prev_cells) {
      if (!rows[rc.first]) continue;
      out.values.insert(table.normalized(rc.first, rc.second));
      out.cells.insert(rc);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration

std::vector<Program> enumerate_programs(const ActionSpace& space, const Table& table, std::size_t cap) {
  (void)table;
  std::vector<Program> out;
  const auto& atoms = space.atoms();
  const std::size_t max = space.max_conditions();

  auto emit = [&](std::vector<Action> actions) {
    if (out.size() >= cap) {
      throw std::length_error("enumerate_programs: cap of " + std::to_string(cap) +
                              " programs exceeded (reached " + std::to_string(out.size() + 1) + ")");
    }
    actions.push_back(Action::stop());
    out.push_back(Program{std::move(actions), true});
  };

  // Condition lists are sequences of groups: a single atom, or two atoms
  // joined by OR.
  auto grow = [&](auto&& self, std::vector<Action>& prefix, std::size_t used, std::size_t min_atoms) -> void {
    if (used >= min_atoms) emit(prefix);
    if (used + 1 > max) return;
    for (const auto& a : atoms) {
      prefix.push_back(a);
      self(self, prefix, used + 1, min_atoms);
      prefix.pop_back();
    }
    if (used + 2 > max) return;
    for (const auto& a : atoms) {
      for (const auto& b : atoms) {
        prefix.push_back(a);
        prefix.push_back(Action::disjunction());
        prefix.push_back(b);
        self(self, prefix, used + 2, min_atoms);
        prefix.resize(prefix.size() - 3);
      }
    }
  };

  for (const auto& h : space.heads()) {
    std::vector<Action> prefix{h};
    switch (h.kind) {
      case ActionKind::SelectColumn: grow(grow, prefix, 0, 0); break;
      case ActionKind::FollowUpWhere: grow(grow, prefix, 0, 1); break;
      default: emit(prefix); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spuriousness

bool is_spurious(const Program& program, const Table& table, const AnswerSet& gold,
                 std::size_t trials, std::uint64_t seed, const std::optional<AnswerSet>& prev_answer) {
  const AnswerSet original = execute(program, table, prev_answer);
  if (!exact_match(original, gold)) {
    throw ContractViolation("is_spurious: program does not reproduce the gold answer");
  }
  const std::size_t n = table.row_count();
  if (n < 2) return false;

  std::vector<std::vector<std::size_t>> orders;
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  auto swap01 = identity;
  std::swap(swap01[0], swap01[1]);
  orders.push_back(std::move(swap01));

  std::mt19937_64 rng(seed);
  for (std::size_t t = 1; t < trials; ++t) {
    auto order = identity;
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
    orders.push_back(std::move(order));
  }

  for (const auto& order : orders) {
    const Table shuffled = table.permuted(order);
    std::optional<AnswerSet> moved_prev = prev_answer;
    if (moved_prev && !moved_prev->cells.empty()) {
      std::vector<std::size_t> where(n);
      for (std::size_t i = 0; i < n; ++i) where[order[i]] = i;
      std::set<CellCoord> cells;
      for (const auto& [r, c] : moved_prev->cells) cells.insert({r < n ? where[r] : r, c});
      moved_prev->cells = std::move(cells);
    }
    if (!exact_match(execute(program, shuffled, moved_prev), original)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Tokens and keywords

std::string canonical_keyword(std::string_view word) {
  std::string w;
  for (const char c : word) {
    if (c == '-' || c == '_' || c == ' ') continue;
    w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (w == "select") return "SELECT";
  if (w == "where") return "WHERE";
  if (w == "and") return "AND";
  if (w == "or") return "OR";
  if (w == "followup" || w == "followupwhere") return "FOLLOWUP";
  if (w == "fpcell" || w == "followupcell") return "FPCELL";
  if (w == "is") return "IS";
  if (w == "max") return "MAX";
  if (w == "min") return "MIN";
  if (w == "=" || w == "==" || w == "equal" || w == "equals") return "=";
  if (w == "!=" || w == "<>" || w == "notequal" || w == "notequals") return "!=";
  if (w == ">" || w == "greater" || w == "greaterthan") return ">";
  if (w == "<" || w == "less" || w == "lessthan") return "<";
  return {};
}

std::set<std::string> program_keywords(const ProgramState& state) {
  std::set<std::string> kw;
  std::size_t groups = 0;
  for (const auto& a : state.actions) {
    switch (a.kind) {
      case ActionKind::SelectColumn: kw.insert("SELECT"); break;
      case ActionKind::FollowUpWhere: kw.insert("FOLLOWUP"); kw.insert("WHERE"); break;
      case ActionKind::FpCell: kw.insert("FPCELL"); break;
      case ActionKind::CondEquals: kw.insert("="); ++groups; break;
      case ActionKind::CondNotEquals: kw.insert("!="); ++groups; break;
      case ActionKind::CondGreater: kw.insert(">"); ++groups; break;
      case ActionKind::CondLess: kw.insert("<"); ++groups; break;
      case ActionKind::CondMax: kw.insert("IS"); kw.insert("MAX"); ++groups; break;
      case ActionKind::CondMin: kw.insert("IS"); kw.insert("MIN"); ++groups; break;
      case ActionKind::CondOr: kw.insert("OR"); --groups; break;
      case ActionKind::Stop: break;
    }
  }
  if (groups > 0) kw.insert("WHERE");
  if (groups > 1) kw.insert("AND");
  return kw;
}

std::set<std::string> action_tokens(const Action& action, const Table& table) {
  std::set<std::string> out;
  if (action.column && *action.column < table.col_count()) {
    for (auto& t : tokenize(table.column_names()[*action.column])) out.insert(std::move(t));
  }
  if (action.value) {
    for (auto& t : tokenize(action.value->raw)) out.insert(std::move(t));
  }
  return out;
}

std::set<std::string> program_tokens(const ProgramState& state, const Table& table) {
  std::set<std::string> out;
  for (const auto& a : state.actions) {
    auto t = action_tokens(a, table);
    out.insert(t.begin(), t.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

bool is_reserved_word(std::string_view s) {
  std::string up;
  for (const char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  static const std::set<std::string> reserved = {"SELECT", "WHERE", "AND", "OR",  "FOLLOWUP",
                                                 "FPCELL", "IS",    "MAX", "MIN", "..."};
  return reserved.count(up) > 0;
}

bool is_operator_char(char c) { return c == '=' || c == '!' || c == '<' || c == '>' || c == '"'; }

std::string quote_if_needed(const std::string& s) {
  bool needs = s.empty() || is_reserved_word(s) || s.front() == '\\';
  for (const char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || is_operator_char(c)) needs = true;
  }
  if (!needs) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string condition_text(const Action& a, const Table& table) {
  std::string s = quote_if_needed(table.column_names().at(*a.column));
  switch (a.kind) {
    case ActionKind::CondEquals: return s + " = " + quote_if_needed(a.value->raw);
    case ActionKind::CondNotEquals: return s + " != " + quote_if_needed(a.value->raw);
    case ActionKind::CondGreater: return s + " > " + quote_if_needed(a.value->raw);
    case ActionKind::CondLess: return s + " < " + quote_if_needed(a.value->raw);
    case ActionKind::CondMax: return s + " IS MAX";
    case ActionKind::CondMin: return s + " IS MIN";
    default: throw ContractViolation("condition_text: not a condition");
  }
}

}  // namespace

std::string serialize(const ProgramState& state, const Table& table) {
  std::string out;
  bool first_condition = true;
  for (std::size_t i = 0; i < state.actions.size(); ++i) {
    const Action& a = state.actions[i];
    switch (a.kind) {
      case ActionKind::SelectColumn:
        out += "SELECT " + quote_if_needed(table.column_names().at(*a.column));
        break;
      case ActionKind::FollowUpWhere: out += "FOLLOWUP"; break;
      case ActionKind::FpCell:
        out += "FPCELL " + quote_if_needed(table.column_names().at(*a.column));
        break;
      case ActionKind::CondOr: out += " OR"; break;
      case ActionKind::Stop: break;
      default:
        if (i > 0 && state.actions[i - 1].kind == ActionKind::CondOr) {
          out += " ";
        } else {
          out += first_condition ? " WHERE " : " AND ";
        }
        first_condition = false;
        out += condition_text(a, table);
        break;
    }
  }
  if (!state.complete) out += out.empty() ? "..." : " ...";
  return out;
}

namespace {

struct Lexeme {
  enum class Type { Word, Quoted, Op } type;
  std::string text;
};

std::vector<Lexeme> lex(std::string_view s) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          text.push_back(s[i + 1]);
          i += 2;
        } else if (s[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          text.push_back(s[i++]);
        }
      }
      if (!closed) throw ProgramParseError("unterminated quoted name");
      out.push_back({Lexeme::Type::Quoted, std::move(text)});
    } else if (c == '!' || c == '=' || c == '<' || c == '>') {
      if (c == '!') {
        if (i + 1 >= s.size() || s[i + 1] != '=') throw ProgramParseError("expected '!='");
        out.push_back({Lexeme::Type::Op, "!="});
        i += 2;
      } else {
        out.push_back({Lexeme::Type::Op, std::string(1, c)});
        ++i;
      }
    } else {
      std::string text;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && !is_operator_char(s[i])) {
        text.push_back(s[i++]);
      }
      out.push_back({Lexeme::Type::Word, std::move(text)});
    }
  }
  return out;
}

class ProgramParser {
 public:
  ProgramParser(std::vector<Lexeme> lexemes, const Table& table)
      : lx_(std::move(lexemes)), table_(table) {}

  ProgramState parse() {
    ProgramState st;
    bool incomplete = false;
    if (!lx_.empty() && lx_.back().type == Lexeme::Type::Word && lx_.back().text == "...") {
      incomplete = true;
      lx_.pop_back();
    }
    if (lx_.empty()) {
      if (!incomplete) throw ProgramParseError("empty program");
      return st;
    }

    if (keyword("SELECT")) {
      st.actions.push_back(Action::select(column()));
    } else if (keyword("FPCELL")) {
      st.actions.push_back(Action::fp_cell(column()));
    } else if (keyword("FOLLOWUP")) {
      st.actions.push_back(Action::follow_up());
      if (at_end()) {
        if (!incomplete) fail("FOLLOWUP needs a condition");
        return st;
      }
      if (!keyword("WHERE")) fail("expected WHERE after FOLLOWUP");
      st.actions.push_back(condition());
    } else {
      fail("expected SELECT, FOLLOWUP or FPCELL");
    }

    if (st.actions.front().kind == ActionKind::SelectColumn && !at_end()) {
      if (!keyword("WHERE")) fail("expected WHERE");
      st.actions.push_back(condition());
    }
    while (!at_end()) {
      if (keyword("OR")) {
        st.actions.push_back(Action::disjunction());
        if (at_end()) {
          if (!incomplete) fail("OR needs a right-hand condition");
          break;
        }
        st.actions.push_back(condition());
      } else if (keyword("AND")) {
        st.actions.push_back(condition());
      } else {
        fail("expected AND or OR");
      }
    }
    if (!incomplete) st.actions.push_back(Action::stop());
    if (!trace(st.actions)) fail("program violates the grammar");
    st.complete = !incomplete;
    return st;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ProgramParseError(msg + " (at token " + std::to_string(pos_) + ")");
  }
  bool at_end() const { return pos_ >= lx_.size(); }

  bool keyword(std::string_view kw) {
    if (at_end() || lx_[pos_].type != Lexeme::Type::Word) return false;
    std::string up;
    for (const char c : lx_[pos_].text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (up != kw) return false;
    ++pos_;
    return true;
  }

  std::string name() {
    if (at_end() || lx_[pos_].type == Lexeme::Type::Op) fail("expected a name or value");
    return lx_[pos_++].text;
  }

  std::size_t column() {
    const auto n = name();
    const auto idx = table_.column_index(n);
    if (!idx) fail("unknown column '" + n + "'");
    return *idx;
  }

  Action condition() {
    const std::size_t col = column();
    if (keyword("IS")) {
      if (keyword("MAX")) return Action::condition(ActionKind::CondMax, col);
      if (keyword("MIN")) return Action::condition(ActionKind::CondMin, col);
      fail("expected MAX or MIN");
    }
    if (at_end() || lx_[pos_].type != Lexeme::Type::Op) fail("expected an operator");
    const std::string op = lx_[pos_++].text;
    Cell value = Cell::from_raw(name());
    if (op == "=") return Action::condition(ActionKind::CondEquals, col, std::move(value));
    if (op == "!=") return Action::condition(ActionKind::CondNotEquals, col, std::move(value));
    if (op == ">") return Action::condition(ActionKind::CondGreater, col, std::move(value));
    return Action::condition(ActionKind::CondLess, col, std::move(value));
  }

  std::vector<Lexeme> lx_;
  const Table& table_;
  std::size_t pos_ = 0;
};

}  // namespace

ProgramState parse_program(std::string_view text, const Table& table) {
  return ProgramParser(lex(text), table).parse();
}

}  // namespace tabparse
