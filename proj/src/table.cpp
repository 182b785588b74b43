#include "tabparse/table.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tabparse/text.hpp"

namespace tabparse {

namespace fs = std::filesystem;

Cell Cell::from_raw(std::string raw) {
  Cell c{std::move(raw), std::nullopt};
  c.numeric = parse_number(c.raw);
  return c;
}

AnswerSet AnswerSet::of(std::initializer_list<std::string> raw_values) {
  AnswerSet a;
  for (const auto& v : raw_values) a.insert(v);
  return a;
}

void AnswerSet::insert(const std::string& raw) { values.insert(normalize_answer(raw)); }

// ---------------------------------------------------------------------------
// Table

Table::Table(std::string id, std::vector<std::string> column_names,
             std::vector<std::vector<Cell>> rows)
    : id_(std::move(id)), column_names_(std::move(column_names)), rows_(std::move(rows)) {
  const std::size_t cols = column_names_.size();
  std::set<std::string> canonical;
  for (const auto& name : column_names_) {
    std::string key;
    for (const auto& tok : tokenize(name)) key += tok + " ";
    if (!canonical.insert(key).second) {
      throw IngestError("table '" + id_ + "': duplicate column name '" + name + "'");
    }
  }
  has_numeric_.assign(cols, false);
  normalized_.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != cols) {
      throw IngestError("table '" + id_ + "': row " + std::to_string(r) + " has " +
                        std::to_string(rows_[r].size()) + " cells, expected " +
                        std::to_string(cols));
    }
    auto& norm = normalized_.emplace_back();
    for (std::size_t c = 0; c < cols; ++c) {
      norm.push_back(normalize_answer(rows_[r][c].raw));
      if (rows_[r][c].numeric) has_numeric_[c] = true;
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (column_names_[c] != "Index") continue;
    bool positional = true;
    for (std::size_t r = 0; r < rows_.size() && positional; ++r) {
      positional = rows_[r][c].numeric && *rows_[r][c].numeric == static_cast<double>(r + 1);
    }
    if (positional) index_column_ = c;
  }
}

std::optional<std::size_t> Table::column_index(const std::string& name) const {
  const auto it = std::find(column_names_.begin(), column_names_.end(), name);
  if (it == column_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - column_names_.begin());
}

Table Table::permuted(const std::vector<std::size_t>& order) const {
  std::vector<std::vector<Cell>> rows;
  rows.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    rows.push_back(rows_[order[r]]);
    if (index_column_) rows.back()[*index_column_] = rows_[r][*index_column_];
  }
  return Table(id_, column_names_, std::move(rows));
}

// ---------------------------------------------------------------------------
// Delimited text

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text, char delim) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_record = [&] {
    if (field_started || !record.empty()) {
      record.push_back(std::move(field));
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (c == delim) {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // tolerated before '\n'
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw IngestError("unterminated quoted field");
  end_record();
  return records;
}

std::string quote_csv(const std::string& s) {
  if (!s.empty() && s.find_first_of(",\"\n\r") == std::string::npos && s.front() != ' ') return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

CellCoord parse_coord(const std::string& s) {
  // "(row, col)"
  std::string inner = s;
  inner.erase(std::remove_if(inner.begin(), inner.end(),
                             [](char c) { return c == ' ' || c == '(' || c == ')'; }),
              inner.end());
  const auto comma = inner.find(',');
  if (comma == std::string::npos) throw IngestError("bad answer coordinate '" + s + "'");
  try {
    std::size_t used = 0;
    const auto row = std::stoul(inner.substr(0, comma), &used);
    if (used != comma) throw IngestError("bad answer coordinate '" + s + "'");
    const auto col_text = inner.substr(comma + 1);
    const auto col = std::stoul(col_text, &used);
    if (used != col_text.size()) throw IngestError("bad answer coordinate '" + s + "'");
    return {row, col};
  } catch (const std::logic_error&) {
    throw IngestError("bad answer coordinate '" + s + "'");
  }
}

}  // namespace

Table parse_table(const std::string& id, const std::string& text, char delimiter) {
  auto records = parse_records(text, delimiter);
  if (records.empty()) throw IngestError("table '" + id + "': no header");
  std::vector<std::string> header = std::move(records.front());
  std::vector<std::vector<Cell>> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw IngestError("table '" + id + "': ragged row " + std::to_string(r - 1) + " (" +
                        std::to_string(records[r].size()) + " cells, header has " +
                        std::to_string(header.size()) + ")");
    }
    auto& row = rows.emplace_back();
    for (auto& field : records[r]) row.push_back(Cell::from_raw(std::move(field)));
  }
  return Table(id, std::move(header), std::move(rows));
}

Table load_table(const fs::path& path, char delimiter) {
  return parse_table(path.filename().string(), read_file(path), delimiter);
}

void save_table(const Table& table, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write table: " + path.string());
  for (std::size_t c = 0; c < table.col_count(); ++c) {
    out << (c ? "," : "") << quote_csv(table.column_names()[c]);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      out << (c ? "," : "") << quote_csv(table.cell(r, c).raw);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// List fields

std::vector<std::string> parse_list_field(const std::string& field) {
  std::string_view s = field;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return {};
  if (s.front() != '[') return {std::string(s)};
  if (s.back() != ']') throw IngestError("unterminated list field: " + field);
  s = s.substr(1, s.size() - 2);

  std::vector<std::string> items;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && s[i] == ' ') ++i;
  };
  skip_ws();
  while (i < s.size()) {
    const char quote = s[i];
    if (quote != '\'' && quote != '"') throw IngestError("unquoted list item in: " + field);
    ++i;
    std::string item;
    bool closed = false;
    for (; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size()) {
        item.push_back(s[++i]);
      } else if (s[i] == quote) {
        closed = true;
        ++i;
        break;
      } else {
        item.push_back(s[i]);
      }
    }
    if (!closed) throw IngestError("unterminated list item in: " + field);
    items.push_back(std::move(item));
    skip_ws();
    if (i < s.size()) {
      if (s[i] != ',') throw IngestError("expected ',' in list field: " + field);
      ++i;
      skip_ws();
    }
  }
  return items;
}

std::string format_list_field(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += '\'';
    for (const char c : items[i]) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    out += '\'';
  }
  out += ']';
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

std::size_t Dataset::example_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.examples.size();
  return n;
}

const Table& Dataset::table_for(const Example& ex) const {
  const auto it = tables.find(ex.table_ref);
  if (it == tables.end()) throw IngestError("unknown table: " + ex.table_ref);
  return it->second;
}

namespace {

constexpr const char* kColumns[] = {"id",         "annotator",          "position",   "question",
                                    "table_file", "answer_coordinates", "answer_text"};

}  // namespace

Dataset load_dataset(const fs::path& questions_path, const fs::path& tables_dir) {
  std::istringstream in(read_file(questions_path));
  std::string line;
  if (!std::getline(in, line)) throw IngestError("question file is empty: " + questions_path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_tabs(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : kColumns) {
    if (!col.count(name)) throw IngestError(std::string("question file lacks column '") + name + "'");
  }

  Dataset ds;
  std::map<std::string, std::size_t> seq_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != header.size()) {
      throw IngestError("question file line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    Example ex;
    ex.id = f[col["id"]];
    ex.annotator = f[col["annotator"]];
    try {
      std::size_t used = 0;
      const auto& pos = f[col["position"]];
      ex.position = std::stoul(pos, &used);
      if (used != pos.size()) throw std::invalid_argument("position");
    } catch (const std::logic_error&) {
      throw IngestError("question file line " + std::to_string(line_no) + ": bad position");
    }
    ex.question = f[col["question"]];
    ex.question_tokens = tokenize(ex.question);
    ex.table_ref = f[col["table_file"]];

    try {
      for (const auto& v : parse_list_field(f[col["answer_text"]])) ex.gold_answer.insert(v);
      for (const auto& c : parse_list_field(f[col["answer_coordinates"]])) {
        ex.gold_answer.cells.insert(parse_coord(c));
      }
    } catch (const IngestError& e) {
      throw IngestError("question file line " + std::to_string(line_no) + ": " + e.what());
    }

    if (!ds.tables.count(ex.table_ref)) {
      const auto path = tables_dir / ex.table_ref;
      if (!fs::exists(path)) throw IngestError("missing table file: " + path.string());
      ds.tables.emplace(ex.table_ref, parse_table(ex.table_ref, read_file(path)));
    }
    const Table& table = ds.tables.at(ex.table_ref);
    for (const auto& [r, c] : ex.gold_answer.cells) {
      if (r >= table.row_count() || c >= table.col_count()) {
        throw IngestError("question file line " + std::to_string(line_no) +
                          ": answer coordinate outside table " + ex.table_ref);
      }
    }

    const auto key = ex.sequence_id();
    auto [it, inserted] = seq_index.try_emplace(key, ds.sequences.size());
    if (inserted) ds.sequences.push_back(Sequence{key, {}});
    ds.sequences[it->second].examples.push_back(std::move(ex));
  }

  for (auto& seq : ds.sequences) {
    std::sort(seq.examples.begin(), seq.examples.end(),
              [](const Example& a, const Example& b) { return a.position < b.position; });
    for (std::size_t i = 0; i < seq.examples.size(); ++i) {
      if (seq.examples[i].position != i) {
        throw IngestError("sequence '" + seq.sequence_id + "': gap in positions at " +
                          std::to_string(i));
      }
    }
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& questions_path,
                  const fs::path& tables_dir) {
  if (questions_path.has_parent_path()) fs::create_directories(questions_path.parent_path());
  std::ofstream out(questions_path, std::ios::binary);
  if (!out) throw IngestError("cannot write question file: " + questions_path.string());
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "\t" : "") << kColumns[i];
  out << '\n';
  for (const auto& seq : dataset.sequences) {
    for (const auto& ex : seq.examples) {
      std::vector<std::string> coords;
      for (const auto& [r, c] : ex.gold_answer.cells) {
        coords.push_back("(" + std::to_string(r) + ", " + std::to_string(c) + ")");
      }
      const std::vector<std::string> values(ex.gold_answer.values.begin(), ex.gold_answer.values.end());
      out << ex.id << '\t' << ex.annotator << '\t' << ex.position << '\t' << ex.question << '\t'
          << ex.table_ref << '\t' << format_list_field(coords) << '\t' << format_list_field(values)
          << '\n';
    }
  }
  for (const auto& [ref, table] : dataset.tables) save_table(table, tables_dir / ref);
}

// ---------------------------------------------------------------------------
// Answer comparison

double jaccard(const AnswerSet& a, const AnswerSet& b) {
  if (a.values.empty() && b.values.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& v : a.values) common += b.values.count(v);
  const std::size_t uni = a.values.size() + b.values.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

bool exact_match(const AnswerSet& a, const AnswerSet& b) { return a.values == b.values; }

}  // namespace tabparse
