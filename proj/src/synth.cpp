#include "tabparse/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "tabparse/program.hpp"
#include "tabparse/text.hpp"

namespace tabparse {

namespace {

using Rng = std::mt19937_64;

const std::vector<std::string> kTeams = {
    "Falcons", "Rovers",  "Comets",  "Pilots",   "Wolves",  "Hornets", "Ravens",  "Tigers",
    "Sharks",  "Vipers",  "Eagles",  "Lions",    "Bulls",   "Cobras",  "Giants",  "Hawks",
    "Jaguars", "Knights", "Mustangs", "Owls",    "Panthers", "Raiders", "Stags",  "Titans"};
const std::vector<std::string> kNations = {"Brazil", "Chile", "Norway", "Kenya", "Japan", "Peru"};

const std::vector<std::string> kMaxWords = {"most", "highest", "largest"};
const std::vector<std::string> kMinWords = {"fewest", "lowest", "least"};
const std::vector<std::string> kGtWords = {"more than", "over", "above"};
const std::vector<std::string> kLtWords = {"fewer than", "under", "below"};
const std::vector<std::string> kNeqWords = {"not", "except"};

std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[below(rng, items.size())];
}

std::vector<int> distinct_values(Rng& rng, std::size_t n, int lo, int hi) {
  std::vector<int> pool(static_cast<std::size_t>(hi - lo + 1));
  std::iota(pool.begin(), pool.end(), lo);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(n);
  return pool;
}

struct Row {
  std::string team;
  std::string nation;
  int points;
  int wins;
};

Table build_table(const std::string& id, const std::vector<Row>& rows) {
  std::vector<std::vector<Cell>> cells;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cells.push_back({Cell::from_raw(std::to_string(i + 1)), Cell::from_raw(rows[i].team),
                     Cell::from_raw(rows[i].nation), Cell::from_raw(std::to_string(rows[i].points)),
                     Cell::from_raw(std::to_string(rows[i].wins))});
  }
  return Table(id, {"Index", "Team", "Nation", "Points", "Wins"}, std::move(cells));
}

struct Draft {
  std::string question;
  std::string program;
};

std::string numeric_column(Rng& rng) { return below(rng, 2) ? "Points" : "Wins"; }

int value_of(const Row& r, const std::string& column) { return column == "Points" ? r.points : r.wins; }

/// First question of a sequence. May reorder `rows` to plant an index cue.
Draft first_question(Rng& rng, std::vector<Row>& rows, const SynthConfig& config) {
  std::size_t kind = below(rng, 4);
  const bool one_nation = std::all_of(rows.begin(), rows.end(),
                                      [&](const Row& r) { return r.nation == rows.front().nation; });
  if (kind == 3 && one_nation) kind = 1;
  const std::string col = numeric_column(rng);
  const std::string noun = col == "Points" ? "points" : "wins";
  if (kind == 0) {
    const bool max = below(rng, 2) == 0;
    const std::string word = pick(rng, max ? kMaxWords : kMinWords);
    if (static_cast<double>(rng() >> 11) * 0x1.0p-53 < config.planted_fraction) {
      auto best = std::max_element(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
        return max ? value_of(a, col) < value_of(b, col) : value_of(a, col) > value_of(b, col);
      });
      std::rotate(rows.begin(), best, best + 1);
    }
    return {"which team has the " + word + " " + noun, "SELECT Team WHERE " + col + (max ? " IS MAX" : " IS MIN")};
  }
  std::vector<int> sorted;
  for (const auto& r : rows) sorted.push_back(value_of(r, col));
  std::sort(sorted.begin(), sorted.end());
  if (kind == 1) {
    const int n = sorted[below(rng, sorted.size() - 1)];
    return {"which team has " + pick(rng, kGtWords) + " " + std::to_string(n) + " " + noun,
            "SELECT Team WHERE " + col + " > " + std::to_string(n)};
  }
  if (kind == 2) {
    const int n = sorted[1 + below(rng, sorted.size() - 1)];
    return {"which team has " + pick(rng, kLtWords) + " " + std::to_string(n) + " " + noun,
            "SELECT Team WHERE " + col + " < " + std::to_string(n)};
  }
  const std::string nation = pick(rng, rows).nation;
  return {"which team is " + pick(rng, kNeqWords) + " from " + nation,
          "SELECT Team WHERE Nation != " + nation};
}

Draft follow_up(Rng& rng, std::size_t answer_size) {
  if (answer_size == 1) return {"which nation is that team from", "FPCELL Nation"};
  const std::string col = numeric_column(rng);
  const std::string noun = col == "Points" ? "points" : "wins";
  const bool max = below(rng, 2) == 0;
  return {"of those, which has the " + pick(rng, max ? kMaxWords : kMinWords) + " " + noun,
          "FOLLOWUP WHERE " + col + (max ? " IS MAX" : " IS MIN")};
}

std::size_t compatible_count(const Example& ex, const Table& table, const std::optional<AnswerSet>& prev,
                             std::size_t max_conditions) {
  const ActionSpace space(table, prev ? ex.position : 0, ex.question_tokens, max_conditions);
  std::size_t n = 0;
  for (const auto& p : enumerate_programs(space, table)) {
    n += exact_match(execute(p, table, prev), ex.gold_answer);
    if (n >= 2) break;
  }
  return n;
}

}  // namespace

SynthCorpus synthesize(const SynthConfig& config) {
  if (config.rows < 3) throw std::invalid_argument("synth needs at least 3 rows per table");
  if (config.rows > kTeams.size()) throw std::invalid_argument("synth supports at most 24 rows per table");
  Rng rng(config.seed);
  SynthCorpus out;
  std::size_t examples = 0;
  std::size_t multi = 0;

  for (std::size_t s = 0; s < config.sequences; ++s) {
    std::vector<std::string> teams = kTeams;
    std::shuffle(teams.begin(), teams.end(), rng);
    const auto points = distinct_values(rng, config.rows, 10, 99);
    const auto wins = distinct_values(rng, config.rows, 1, 40);
    std::vector<Row> rows;
    for (std::size_t i = 0; i < config.rows; ++i) rows.push_back({teams[i], pick(rng, kNations), points[i], wins[i]});

    const Draft first = first_question(rng, rows, config);
    const std::string ref = "t" + std::to_string(s) + ".csv";
    const Table& table = out.dataset.tables.insert_or_assign(ref, build_table(ref, rows)).first->second;

    Sequence seq;
    seq.sequence_id = "s" + std::to_string(s) + "/0";
    std::vector<std::string> gold;
    std::vector<Draft> drafts = {first};
    std::optional<AnswerSet> prev;
    for (std::size_t pos = 0; pos < 3; ++pos) {
      const Draft& d = drafts[pos];
      Example ex;
      ex.id = "s" + std::to_string(s);
      ex.annotator = "0";
      ex.position = pos;
      ex.question = d.question;
      ex.question_tokens = tokenize(d.question);
      ex.table_ref = ref;
      ex.gold_answer = execute(parse_program(d.program, table), table, prev);
      if (ex.gold_answer.empty()) throw std::logic_error("synth produced an empty gold answer: " + d.program);
      ++examples;
      multi += compatible_count(ex, table, prev, config.max_conditions) >= 2;
      gold.push_back(d.program);
      prev = ex.gold_answer;
      seq.examples.push_back(std::move(ex));
      // FpCell ends a sequence; a third question only follows a follow-up.
      if (d.program.starts_with("FPCELL") || below(rng, 2) == 0) break;
      drafts.push_back(follow_up(rng, prev->size()));
    }
    out.dataset.sequences.push_back(std::move(seq));
    out.gold_programs.push_back(std::move(gold));
  }
  out.multi_compatible_fraction = examples ? static_cast<double>(multi) / static_cast<double>(examples) : 0.0;
  return out;
}

}  // namespace tabparse
