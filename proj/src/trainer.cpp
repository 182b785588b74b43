#include "tabparse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"
#include "tabparse/text.hpp"

namespace tabparse {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw std::invalid_argument("dev_fraction must be in [0, 1)");
  if (clip && !(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be > 0");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) throw std::invalid_argument("init_scale must be finite and >= 0");
  if (!std::isfinite(exploration_softening)) throw std::invalid_argument("exploration_softening must be finite");
  search.validate();
}

SearchConfig TrainConfig::training_search() const {
  SearchConfig s = search;
  if (on_policy_reinforce && update.intensity == IntensityKind::Reinforce) {
    s.lambda_infinite = false;
    s.lambda = 0.0;
  }
  return s;
}

std::vector<double> TrainHistory::dev_accuracies() const {
  std::vector<double> out;
  for (const auto& e : epochs) out.push_back(e.dev_accuracy);
  return out;
}

namespace {

struct ExampleRef {
  std::size_t sequence;
  std::size_t position;
};

std::optional<AnswerSet> gold_previous(const Sequence& seq, std::size_t position) {
  if (position == 0) return std::nullopt;
  return seq.examples[position - 1].gold_answer;
}

std::vector<ExampleRef> examples_of(const Dataset& ds, std::span<const std::size_t> sequences) {
  std::vector<ExampleRef> out;
  for (const auto s : sequences) {
    for (std::size_t p = 0; p < ds.sequences[s].examples.size(); ++p) out.push_back({s, p});
  }
  return out;
}

Eigen::VectorXd critique_offset(const CandidateSet& k, const SearchConfig& search) {
  if (!search.model_shaping) return {};
  Eigen::VectorXd offset(static_cast<Eigen::Index>(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) {
    offset[static_cast<Eigen::Index>(i)] = search.eta * k.programs[i].critique;
  }
  return offset;
}

const Candidate* top_scored(const CandidateSet& k) {
  const Candidate* best = nullptr;
  for (const auto& c : k.programs) {
    if (!best || c.score > best->score || (c.score == best->score && c.serialization < best->serialization)) {
      best = &c;
    }
  }
  return best;
}

std::string coordinates(std::size_t epoch, const Example& ex) {
  return "epoch " + std::to_string(epoch) + ", example " + ex.sequence_id() + " position " +
         std::to_string(ex.position);
}

EpochRecord run_epoch(const Dataset& ds, std::vector<ExampleRef>& order, ParamVector& theta,
                      const Lexicon& lexicon, const TrainConfig& config, Rng& rng, std::size_t epoch) {
  const auto start = std::chrono::steady_clock::now();
  EpochRecord rec;
  rec.epoch = epoch;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t train_correct = 0;
  const SearchConfig search = config.training_search();

  for (const auto& ref : order) {
    const Sequence& seq = ds.sequences[ref.sequence];
    const Example& ex = seq.examples[ref.position];
    const Table& table = ds.table_for(ex);
    const CandidateSet k =
        beam_search(ex, table, theta, lexicon, search, {gold_previous(seq, ref.position), true});
    if (k.empty()) {
      ++rec.skipped_empty_beam;
      continue;
    }
    if (const Candidate* top = top_scored(k); top->compatible) ++train_correct;

    UpdateContext ctx{k, theta, rng, {}, critique_offset(k, config.search)};
    if (config.update.intensity == IntensityKind::OffPolicyPG) {
      ctx.exploration = exploration_policy(k, theta, config.exploration_softening,
                                           config.search.shaping_enabled, config.search.eta,
                                           ctx.score_offset);
    }
    UpdateResult result;
    try {
      result = generalized_update(config.update, ctx);
    } catch (const std::domain_error& e) {
      throw TrainingError(std::string(e.what()) + " at " + coordinates(epoch, ex));
    }
    switch (result.status) {
      case UpdateStatus::NoCompatible: ++rec.skipped_no_compatible; continue;
      case UpdateStatus::NoViolation: ++rec.skipped_no_violation; continue;
      case UpdateStatus::Applied: break;
    }
    double scale = config.learning_rate;
    if (config.clip) {
      double norm2 = 0.0;
      for (const auto& [id, v] : result.delta.entries()) norm2 += v * v;
      const double norm = std::sqrt(norm2);
      if (norm > config.clip_norm) scale *= config.clip_norm / norm;
    }
    try {
      theta.add_scaled(result.delta, scale);
    } catch (const std::exception& e) {
      throw TrainingError(std::string(e.what()) + " at " + coordinates(epoch, ex));
    }
    ++rec.updates;
  }
  rec.train_accuracy = order.empty() ? 0.0 : static_cast<double>(train_correct) / static_cast<double>(order.size());
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

SearchConfig inference_config(SearchConfig search) {
  search.shaping_enabled = false;
  return search;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_sequences(
    std::size_t sequence_count, double dev_fraction, std::uint64_t seed) {
  std::vector<std::size_t> all(sequence_count);
  std::iota(all.begin(), all.end(), 0);
  Rng rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  auto dev_count = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(sequence_count)));
  if (dev_fraction > 0.0 && sequence_count >= 2) dev_count = std::clamp<std::size_t>(dev_count, 1, sequence_count - 1);
  if (sequence_count < 2) dev_count = 0;
  std::vector<std::size_t> dev(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(dev_count));
  std::vector<std::size_t> train(all.begin() + static_cast<std::ptrdiff_t>(dev_count), all.end());
  std::sort(dev.begin(), dev.end());
  std::sort(train.begin(), train.end());
  return {train, dev};
}

ParamVector initial_parameters(const Dataset& dataset, std::span<const std::size_t> sequences,
                               std::size_t max_conditions, double scale, std::uint64_t seed) {
  ParamVector theta;
  if (scale == 0.0) return theta;
  std::set<std::string> ids = {"recall"};
  for (const auto& ref : examples_of(dataset, sequences)) {
    const Example& ex = dataset.sequences[ref.sequence].examples[ref.position];
    const Table& table = dataset.table_for(ex);
    const ActionSpace space(table, ex.position, ex.question_tokens, max_conditions);
    const FeatureContext fctx(ex.question_tokens, table, ex.position);
    auto collect = [&](const Action& a) {
      const FeatureVector f = fctx.action_features(a);
      for (const auto& [id, v] : f.entries()) ids.insert(id);
    };
    for (const auto& a : space.heads()) collect(a);
    for (const auto& a : space.atoms()) collect(a);
    collect(Action::disjunction());
    collect(Action::stop());
  }
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& id : ids) theta.set(id, scale * (2.0 * uniform01(rng) - 1.0));
  return theta;
}

TrainResult train(const Dataset& dataset, const Lexicon& lexicon, const TrainConfig& config) {
  config.validate();
  if (dataset.example_count() == 0) throw std::invalid_argument("no examples");

  TrainResult out;
  std::tie(out.train_sequences, out.dev_sequences) =
      split_sequences(dataset.sequences.size(), config.dev_fraction, config.seed);
  const std::vector<std::size_t>& selection = out.dev_sequences.empty() ? out.train_sequences : out.dev_sequences;
  const SearchConfig eval_search = inference_config(config.search);

  Rng rng(config.seed);
  auto order = examples_of(dataset, out.train_sequences);
  ParamVector theta = initial_parameters(dataset, out.train_sequences, config.search.max_conditions,
                                         config.init_scale, config.seed);
  ParamVector best_theta;
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec = run_epoch(dataset, order, theta, lexicon, config, rng, epoch);
    rec.dev_accuracy = evaluate(dataset, selection, theta, lexicon, eval_search);
    if (!have_best || rec.dev_accuracy > out.history.best_dev_accuracy) {
      have_best = true;
      best_theta = theta;
      out.history.best_epoch = epoch;
      out.history.best_dev_accuracy = rec.dev_accuracy;
    }
    out.history.epochs.push_back(rec);
  }

  if (config.refit && !out.dev_sequences.empty()) {
    std::vector<std::size_t> all(dataset.sequences.size());
    std::iota(all.begin(), all.end(), 0);
    auto all_examples = examples_of(dataset, all);
    Rng refit_rng(config.seed);
    ParamVector refit = initial_parameters(dataset, all, config.search.max_conditions, config.init_scale, config.seed);
    for (std::size_t epoch = 1; epoch <= out.history.best_epoch; ++epoch) {
      run_epoch(dataset, all_examples, refit, lexicon, config, refit_rng, epoch);
    }
    best_theta = std::move(refit);
  }
  out.theta = std::move(best_theta);
  return out;
}

Evaluation evaluate_detailed(const Dataset& dataset, std::span<const std::size_t> sequences,
                             const ParamVector& theta, const Lexicon& lexicon,
                             const SearchConfig& search) {
  const SearchConfig config = inference_config(search);
  Evaluation out;
  for (const auto s : sequences) {
    const Sequence& seq = dataset.sequences.at(s);
    std::optional<AnswerSet> prev;
    for (const auto& ex : seq.examples) {
      const Table& table = dataset.table_for(ex);
      const CandidateSet k = beam_search(ex, table, theta, lexicon, config, {prev, false});
      Prediction pred{seq.sequence_id, ex.position, ex.question, "", {}, false};
      if (!k.empty()) {
        pred.program = k.programs.front().serialization;
        pred.answer = k.programs.front().answer;
      }
      pred.correct = !k.empty() && exact_match(pred.answer, ex.gold_answer);
      out.correct += pred.correct;
      ++out.total;
      prev = pred.answer;
      out.predictions.push_back(std::move(pred));
    }
  }
  return out;
}

double evaluate(const Dataset& dataset, std::span<const std::size_t> sequences, const ParamVector& theta,
                const Lexicon& lexicon, const SearchConfig& search) {
  const Evaluation e = evaluate_detailed(dataset, sequences, theta, lexicon, search);
  if (e.total == 0) throw std::invalid_argument("no examples");
  return e.accuracy();
}

double evaluate(const Dataset& dataset, const ParamVector& theta, const Lexicon& lexicon,
                const SearchConfig& search) {
  std::vector<std::size_t> all(dataset.sequences.size());
  std::iota(all.begin(), all.end(), 0);
  return evaluate(dataset, all, theta, lexicon, search);
}

double stability(std::span<const double> accuracies) {
  if (accuracies.size() < 2) throw std::invalid_argument("stability needs at least 2 epochs");
  double total = 0.0;
  for (std::size_t t = 1; t < accuracies.size(); ++t) total += std::abs(accuracies[t] - accuracies[t - 1]);
  return total / static_cast<double>(accuracies.size() - 1);
}

double stability(const TrainHistory& history) { return stability(history.dev_accuracies()); }

AuditResult spurious_audit(const Dataset& dataset, const ParamVector& theta, const Lexicon& lexicon,
                           const SearchConfig& search, std::size_t sample_size, std::uint64_t seed,
                           std::size_t trials) {
  std::vector<std::size_t> all(dataset.sequences.size());
  std::iota(all.begin(), all.end(), 0);
  auto pool = examples_of(dataset, all);
  Rng rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(pool.size(), sample_size));

  AuditResult out;
  out.sampled = pool.size();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Sequence& seq = dataset.sequences[pool[i].sequence];
    const Example& ex = seq.examples[pool[i].position];
    const Table& table = dataset.table_for(ex);
    const auto prev = gold_previous(seq, pool[i].position);
    const CandidateSet k = beam_search(ex, table, theta, lexicon, search, {prev, true});
    if (k.compatible.empty()) continue;
    const Candidate& top = k.programs[k.compatible.front()];
    ++out.total;
    out.spurious += is_spurious(top.program, table, ex.gold_answer, trials, seed + i, prev);
  }
  return out;
}

std::string metrics_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  j["config"] = config;
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  std::size_t skipped_empty = 0, skipped_compatible = 0, skipped_violation = 0;
  for (const auto& e : report.history.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"dev_accuracy", e.dev_accuracy},
                      {"train_accuracy", e.train_accuracy},
                      {"updates", e.updates},
                      {"skipped_empty_beam", e.skipped_empty_beam},
                      {"skipped_no_compatible", e.skipped_no_compatible},
                      {"skipped_no_violation", e.skipped_no_violation},
                      {"seconds", e.seconds}});
    skipped_empty += e.skipped_empty_beam;
    skipped_compatible += e.skipped_no_compatible;
    skipped_violation += e.skipped_no_violation;
  }
  j["history"] = epochs;
  j["best_epoch"] = report.history.best_epoch;
  j["best_dev_accuracy"] = report.history.best_dev_accuracy;
  j["skips"] = {{"empty_beam", skipped_empty},
                {"no_compatible", skipped_compatible},
                {"no_violation", skipped_violation}};
  j["stability"] = report.stability ? nlohmann::ordered_json(*report.stability) : nullptr;
  j["test_accuracy"] = report.test_accuracy ? nlohmann::ordered_json(*report.test_accuracy) : nullptr;
  if (report.audit) {
    j["spurious_audit"] = {{"spurious", report.audit->spurious},
                           {"total", report.audit->total},
                           {"sampled", report.audit->sampled}};
  } else {
    j["spurious_audit"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string metrics_csv(const TrainHistory& history) {
  std::string out =
      "epoch,dev_accuracy,train_accuracy,updates,skipped_empty_beam,skipped_no_compatible,"
      "skipped_no_violation,seconds\n";
  for (const auto& e : history.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.dev_accuracy) + "," +
           format_double(e.train_accuracy) + "," + std::to_string(e.updates) + "," +
           std::to_string(e.skipped_empty_beam) + "," + std::to_string(e.skipped_no_compatible) + "," +
           std::to_string(e.skipped_no_violation) + "," + format_double(e.seconds) + "\n";
  }
  return out;
}

}  // namespace tabparse
