#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tabparse {

/// Raised for malformed tables, question files and answer fields.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Cell {
  std::string raw;
  std::optional<double> numeric;  // present iff `raw` parses as a number

  static Cell from_raw(std::string raw);
};

using CellCoord = std::pair<std::size_t, std::size_t>;  // (row, column)

/// An answer: a set of normalized strings, optionally with the table
/// cells they were read from. Equality and similarity only look at
/// `values`; `cells` lets follow-up programs recover the rows.
struct AnswerSet {
  std::set<std::string> values;
  std::set<CellCoord> cells;

  static AnswerSet of(std::initializer_list<std::string> raw_values);
  void insert(const std::string& raw);
  bool empty() const { return values.empty(); }
  std::size_t size() const { return values.size(); }
};

/// Immutable row-major table. A column named "Index" whose cells read
/// 1..n in order is treated as the positional row index: it stays in
/// place when rows are permuted.
class Table {
 public:
  Table() = default;
  Table(std::string id, std::vector<std::string> column_names, std::vector<std::vector<Cell>> rows);

  const std::string& id() const { return id_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t col_count() const { return column_names_.size(); }
  const Cell& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  const std::vector<Cell>& row(std::size_t r) const { return rows_[r]; }

  /// Normalized text of a cell (cached).
  const std::string& normalized(std::size_t row, std::size_t col) const {
    return normalized_[row][col];
  }
  std::optional<std::size_t> column_index(const std::string& name) const;
  bool column_has_numeric(std::size_t col) const { return has_numeric_[col]; }
  std::optional<std::size_t> index_column() const { return index_column_; }

  /// Table with data rows reordered: row i of the result is row order[i]
  /// of this table. The positional index column is left in place.
  Table permuted(const std::vector<std::size_t>& order) const;

 private:
  std::string id_;
  std::vector<std::string> column_names_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::vector<std::string>> normalized_;
  std::vector<bool> has_numeric_;
  std::optional<std::size_t> index_column_;
};

struct Example {
  std::string id;         // question-sequence id
  std::string annotator;  // together with `id` identifies the sequence
  std::size_t position = 0;
  std::string question;
  std::vector<std::string> question_tokens;
  std::string table_ref;
  AnswerSet gold_answer;

  std::string sequence_id() const { return id + "/" + annotator; }
};

struct Sequence {
  std::string sequence_id;
  std::vector<Example> examples;  // sorted by position, consecutive from 0
};

struct Dataset {
  std::vector<Sequence> sequences;
  std::map<std::string, Table> tables;

  std::size_t example_count() const;
  const Table& table_for(const Example& ex) const;
};

/// Reads one delimiter-separated table; the first record is the header.
Table load_table(const std::filesystem::path& path, char delimiter = ',');
Table parse_table(const std::string& id, const std::string& text, char delimiter = ',');
void save_table(const Table& table, const std::filesystem::path& path);

/// Reads an SQA-layout question TSV and every table it references.
Dataset load_dataset(const std::filesystem::path& questions_path,
                     const std::filesystem::path& tables_dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& questions_path,
                  const std::filesystem::path& tables_dir);

/// Parses "['a', 'b']" style list literals (or a bare single value).
std::vector<std::string> parse_list_field(const std::string& field);
std::string format_list_field(const std::vector<std::string>& items);

/// |a ∩ b| / |a ∪ b|, 1 when both are empty.
double jaccard(const AnswerSet& a, const AnswerSet& b);
bool exact_match(const AnswerSet& a, const AnswerSet& b);

}  // namespace tabparse
