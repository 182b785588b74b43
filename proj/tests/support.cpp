#include "support.hpp"

#include <algorithm>
#include <set>

#include "tabparse/text.hpp"

namespace tabparse::testing {

namespace {

std::vector<std::vector<Cell>> cells(const std::vector<std::vector<std::string>>& raw) {
  std::vector<std::vector<Cell>> out;
  for (const auto& row : raw) {
    auto& r = out.emplace_back();
    for (const auto& v : row) r.push_back(Cell::from_raw(v));
  }
  return out;
}

const std::vector<std::vector<std::string>> kRugby = {
    {"Karen Andrew", "England", "44"},     {"Christelle Le Duff", "France", "40"},
    {"Daniella Waterman", "England", "35"}, {"Charlotte Barras", "England", "30"},
    {"Naomi Thomas", "Wales", "25"},        {"Sandra Lieberman", "France", "20"},
    {"Aline Sagols", "France", "15"}};

}  // namespace

Table rugby_table() { return Table("rugby.csv", {"Name", "Nation", "Points"}, cells(kRugby)); }

Table indexed_rugby_table() {
  std::vector<std::vector<std::string>> raw;
  for (std::size_t i = 0; i < kRugby.size(); ++i) {
    raw.push_back({std::to_string(i + 1), kRugby[i][0], kRugby[i][1], kRugby[i][2]});
  }
  return Table("rugby.csv", {"Index", "Name", "Nation", "Points"}, cells(raw));
}

Table club_table() {
  return Table("clubs.csv", {"Club", "Losses"},
               cells({{"Bath", "25"}, {"Leeds", "21"}, {"Wasps", "10"}}));
}

Example make_example(const std::string& question, const AnswerSet& gold, std::size_t position,
                     const std::string& table_ref) {
  Example ex;
  ex.id = "q";
  ex.annotator = "0";
  ex.position = position;
  ex.question = question;
  ex.question_tokens = tokenize(question);
  ex.table_ref = table_ref;
  ex.gold_answer = gold;
  return ex;
}

Table random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double numeric_bias) {
  static const std::vector<std::string> names = {"Club", "Losses", "Nation", "Year", "Rank", "Venue"};
  static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
  std::vector<std::string> header(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(cols));
  std::vector<bool> numeric(cols);
  for (std::size_t c = 0; c < cols; ++c) numeric[c] = std::uniform_real_distribution<>(0, 1)(rng) < numeric_bias;
  std::vector<std::vector<std::string>> raw(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      raw[r].push_back(numeric[c] ? std::to_string(rng() % 5) : words[rng() % words.size()]);
    }
  }
  return Table("random.csv", header, cells(raw));
}

CandidateSet candidates_from(const std::vector<Program>& programs, const Example& example,
                             const Table& table, const std::optional<AnswerSet>& prev) {
  const FeatureContext fctx(example.question_tokens, table, example.position);
  CandidateSet out;
  for (const auto& p : programs) {
    Candidate c;
    c.program = p;
    c.serialization = serialize(p, table);
    c.features = fctx.featurize(p);
    c.answer = execute(p, table, prev);
    c.reward = jaccard(c.answer, example.gold_answer);
    c.compatible = exact_match(c.answer, example.gold_answer);
    if (c.compatible) out.compatible.push_back(out.programs.size());
    out.programs.push_back(std::move(c));
  }
  return out;
}

namespace {

bool holds(const Action& atom, const Table& t, std::size_t r, const std::set<std::size_t>& pool) {
  const std::size_t c = *atom.column;
  const Cell& cell = t.cell(r, c);
  switch (atom.kind) {
    case ActionKind::CondEquals:
    case ActionKind::CondNotEquals: {
      bool same = normalize_answer(cell.raw) == normalize_answer(atom.value->raw);
      if (cell.numeric && atom.value->numeric) same = same || *cell.numeric == *atom.value->numeric;
      return atom.kind == ActionKind::CondEquals ? same : !same;
    }
    case ActionKind::CondGreater: return cell.numeric && *cell.numeric > *atom.value->numeric;
    case ActionKind::CondLess: return cell.numeric && *cell.numeric < *atom.value->numeric;
    case ActionKind::CondMax:
    case ActionKind::CondMin: {
      if (!cell.numeric) return false;
      for (const auto other : pool) {
        const auto& n = t.cell(other, c).numeric;
        if (!n) continue;
        if (atom.kind == ActionKind::CondMax ? *n > *cell.numeric : *n < *cell.numeric) return false;
      }
      return true;
    }
    default: return false;
  }
}

}  // namespace

AnswerSet interpret(const Program& program, const Table& table, const std::optional<AnswerSet>& prev) {
  AnswerSet out;
  const Action& head = program.actions.at(0);

  // Rows and cells the previous answer points at.
  std::set<std::size_t> prev_rows;
  std::vector<CellCoord> prev_cells;
  if (head.kind != ActionKind::SelectColumn) {
    if (!prev->cells.empty()) {
      prev_cells.assign(prev->cells.begin(), prev->cells.end());
    } else {
      for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t c = 0; c < table.col_count(); ++c) {
          if (prev->values.count(normalize_answer(table.cell(r, c).raw))) prev_cells.push_back({r, c});
        }
      }
    }
    for (const auto& rc : prev_cells) prev_rows.insert(rc.first);
  }

  if (head.kind == ActionKind::FpCell) {
    if (prev->values.size() != 1) return out;
    for (const auto r : prev_rows) out.insert(table.cell(r, *head.column).raw);
    return out;
  }

  std::set<std::size_t> rows = prev_rows;
  if (head.kind == ActionKind::SelectColumn) {
    for (std::size_t r = 0; r < table.row_count(); ++r) rows.insert(r);
  }

  std::vector<std::vector<Action>> groups;
  for (std::size_t i = 1; i < program.actions.size(); ++i) {
    const Action& a = program.actions[i];
    if (a.kind == ActionKind::Stop) break;
    if (a.kind == ActionKind::CondOr) continue;
    if (program.actions[i - 1].kind == ActionKind::CondOr) {
      groups.back().push_back(a);
    } else {
      groups.push_back({a});
    }
  }
  for (const auto& group : groups) {
    std::set<std::size_t> kept;
    for (const auto r : rows) {
      for (const auto& atom : group) {
        if (holds(atom, table, r, rows)) kept.insert(r);
      }
    }
    rows = kept;
  }

  if (head.kind == ActionKind::SelectColumn) {
    for (const auto r : rows) out.insert(table.cell(r, *head.column).raw);
  } else {
    for (const auto& [r, c] : prev_cells) {
      if (rows.count(r)) out.insert(table.cell(r, c).raw);
    }
  }
  return out;
}

ParamVector random_theta(std::mt19937_64& rng, const std::vector<std::string>& ids, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ParamVector theta;
  for (const auto& id : ids) theta.set(id, u(rng));
  return theta;
}

std::vector<std::string> feature_ids(const CandidateSet& candidates) {
  std::set<std::string> ids;
  for (const auto& c : candidates.programs) {
    for (const auto& [id, v] : c.features.entries()) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

}  // namespace tabparse::testing
