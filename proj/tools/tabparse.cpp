// Command-line driver: train, eval, audit, synth, dump-beams.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabparse/config.hpp"
#include "tabparse/critique.hpp"
#include "tabparse/features.hpp"
#include "tabparse/search.hpp"
#include "tabparse/synth.hpp"
#include "tabparse/trainer.hpp"

namespace fs = std::filesystem;
using namespace tabparse;

namespace {

std::string flag_name(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

void require(const std::string& value, const std::string& key) {
  if (value.empty()) throw std::invalid_argument(flag_name(key) + " is required");
}

Lexicon lexicon_for(const RunConfig& config) {
  return config.lexicon.empty() ? default_lexicon() : load_lexicon(config.lexicon);
}

Dataset training_data(const RunConfig& config) {
  require(config.data, "data");
  require(config.tables, "tables");
  return load_dataset(config.data, config.tables);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::size_t> all_sequences(const Dataset& ds) {
  std::vector<std::size_t> out(ds.sequences.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

int cmd_train(const RunConfig& config) {
  const Dataset ds = training_data(config);
  const Lexicon lexicon = lexicon_for(config);
  const TrainResult result = train(ds, lexicon, config.train);
  write_checkpoint(result.theta, config.checkpoint);

  MetricsReport report;
  report.config = config_entries(config);
  report.history = result.history;
  if (result.history.epochs.size() >= 2) report.stability = stability(result.history);
  if (!config.test_data.empty()) {
    const Dataset test = load_dataset(config.test_data, config.test_tables.empty() ? config.tables : config.test_tables);
    report.test_accuracy = evaluate(test, result.theta, lexicon, config.train.search);
  }
  report.audit = spurious_audit(ds, result.theta, lexicon, config.train.search, config.audit_sample,
                                config.train.seed, config.audit_trials);

  open_output(config.report) << metrics_json(report);
  open_output(fs::path(config.report).replace_extension(".csv")) << metrics_csv(result.history);

  std::cout << "best epoch " << result.history.best_epoch << ", selection accuracy "
            << result.history.best_dev_accuracy << "\n";
  if (report.stability) std::cout << "stability " << *report.stability << "\n";
  if (report.test_accuracy) std::cout << "test accuracy " << *report.test_accuracy << "\n";
  std::cout << "spurious " << report.audit->spurious << " / " << report.audit->total << "\n";
  std::cout << "checkpoint " << config.checkpoint << ", report " << config.report << "\n";
  return 0;
}

int cmd_eval(const RunConfig& config) {
  const Dataset ds = training_data(config);
  const Lexicon lexicon = lexicon_for(config);
  const ParamVector theta = read_checkpoint(fs::path(config.checkpoint));
  const auto sequences = all_sequences(ds);
  const Evaluation e = evaluate_detailed(ds, sequences, theta, lexicon, config.train.search);
  if (e.total == 0) throw std::invalid_argument("no examples");

  if (!config.predictions.empty()) {
    auto out = open_output(config.predictions);
    for (const auto& p : e.predictions) {
      out << nlohmann::json{{"sequence_id", p.sequence_id},
                            {"position", p.position},
                            {"question", p.question},
                            {"program", p.program},
                            {"answer", p.answer.values},
                            {"correct", p.correct}}
                 .dump()
          << "\n";
    }
  }
  if (!config.dump_beams.empty()) {
    SearchConfig search = config.train.search;
    search.shaping_enabled = false;
    auto out = open_output(config.dump_beams);
    std::size_t i = 0;
    for (const auto& seq : ds.sequences) {
      for (const auto& ex : seq.examples) {
        std::optional<AnswerSet> prev;
        if (ex.position > 0) prev = e.predictions[i - 1].answer;
        ++i;
        out << beam_dump_line(ex, beam_search(ex, ds.table_for(ex), theta, lexicon, search, {prev, false}))
            << "\n";
      }
    }
  }
  std::cout << "accuracy " << e.accuracy() << " (" << e.correct << " / " << e.total << ")\n";
  return 0;
}

int cmd_audit(const RunConfig& config) {
  const Dataset ds = training_data(config);
  const ParamVector theta = read_checkpoint(fs::path(config.checkpoint));
  const AuditResult a = spurious_audit(ds, theta, lexicon_for(config), config.train.search, config.audit_sample,
                                       config.train.seed, config.audit_trials);
  std::cout << "spurious " << a.spurious << " / " << a.total << " (sampled " << a.sampled << ")\n";
  return 0;
}

int cmd_synth(const RunConfig& config) {
  SynthConfig sc = config.synth;
  sc.seed = config.train.seed;
  sc.max_conditions = config.train.search.max_conditions;
  const SynthCorpus corpus = synthesize(sc);
  const fs::path dir = config.out;
  save_dataset(corpus.dataset, dir / "questions.tsv", dir / "tables");
  auto gold = open_output(dir / "gold.tsv");
  gold << "sequence_id\tposition\tprogram\n";
  for (std::size_t s = 0; s < corpus.gold_programs.size(); ++s) {
    for (std::size_t p = 0; p < corpus.gold_programs[s].size(); ++p) {
      gold << corpus.dataset.sequences[s].sequence_id << '\t' << p << '\t' << corpus.gold_programs[s][p] << '\n';
    }
  }
  std::cout << corpus.dataset.sequences.size() << " sequences, " << corpus.dataset.example_count()
            << " questions, " << corpus.multi_compatible_fraction * 100.0
            << "% with several compatible programs, written to " << dir.string() << "\n";
  return 0;
}

int cmd_dump_beams(const RunConfig& config) {
  const Dataset ds = training_data(config);
  const Lexicon lexicon = lexicon_for(config);
  ParamVector theta;
  if (fs::exists(config.checkpoint)) theta = read_checkpoint(fs::path(config.checkpoint));
  const SearchConfig search = config.train.training_search();
  std::ofstream file;
  if (!config.dump_beams.empty()) file = open_output(config.dump_beams);
  std::ostream& out = config.dump_beams.empty() ? std::cout : file;
  for (const auto& seq : ds.sequences) {
    for (std::size_t p = 0; p < seq.examples.size(); ++p) {
      const Example& ex = seq.examples[p];
      std::optional<AnswerSet> prev;
      if (p > 0) prev = seq.examples[p - 1].gold_answer;
      out << beam_dump_line(ex, beam_search(ex, ds.table_for(ex), theta, lexicon, search, {prev, true})) << "\n";
    }
  }
  return 0;
}

/// Loads `--config FILE` before the command line is parsed so that flags
/// override file values.
void prescan_config(int argc, char** argv, RunConfig& config) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      apply_config_file(config, argv[i + 1]);
    } else if (arg.starts_with("--config=")) {
      apply_config_file(config, arg.substr(9));
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig config;
  try {
    prescan_config(argc, argv, config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"tabparse: learn table question answering programs from answers"};
  app.fallthrough();
  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "key=value configuration file (flags override it)");
  app.add_flag("--print-config", print_config, "print the resolved configuration");
  for (const auto& key : config_keys()) {
    const std::string flag = flag_name(key.name);
    app.add_option_function<std::string>(
           flag,
           [&config, &key, flag](const std::string& value) {
             try {
               key.set(config, value);
             } catch (const std::invalid_argument& e) {
               throw CLI::ValidationError(flag, e.what());
             }
           },
           key.help)
        ->default_str(key.get(config));
  }

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint and metrics report");
  auto* eval_cmd = app.add_subcommand("eval", "exact-match accuracy of a checkpoint");
  auto* audit_cmd = app.add_subcommand("audit", "count spurious top programs under row permutations");
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus");
  auto* dump_cmd = app.add_subcommand("dump-beams", "write the training-time beam of every example");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (print_config) {
    std::cout << format_config(config);
    if (app.get_subcommands().empty()) return 0;
  }
  try {
    config.train.validate();
    if (*train_cmd) return cmd_train(config);
    if (*eval_cmd) return cmd_eval(config);
    if (*audit_cmd) return cmd_audit(config);
    if (*synth_cmd) return cmd_synth(config);
    if (*dump_cmd) return cmd_dump_beams(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 1;
}
