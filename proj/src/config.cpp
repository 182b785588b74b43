#include "tabparse/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tabparse/text.hpp"

namespace tabparse {

namespace {

double to_real(const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  const auto n = parse_number(v);
  if (!n) throw std::invalid_argument("expected a number, got '" + v + "'");
  return *n;
}

std::uint64_t to_unsigned(const std::string& v) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected on/off, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "on" : "off"; }

std::string from_real(double d) { return std::isinf(d) ? "inf" : format_double(d); }

ConfigKey text_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {std::move(name), std::move(help), [field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }};
}

template <typename Access>
ConfigKey size_key(std::string name, std::string help, Access access) {
  return {std::move(name), std::move(help),
          [access](RunConfig& c, const std::string& v) { access(c) = static_cast<std::size_t>(to_unsigned(v)); },
          [access](const RunConfig& c) { return std::to_string(access(c)); }};
}

template <typename Access>
ConfigKey real_key(std::string name, std::string help, Access access) {
  return {std::move(name), std::move(help), [access](RunConfig& c, const std::string& v) { access(c) = to_real(v); },
          [access](const RunConfig& c) { return from_real(access(c)); }};
}

template <typename Access>
ConfigKey bool_key(std::string name, std::string help, Access access) {
  return {std::move(name), std::move(help), [access](RunConfig& c, const std::string& v) { access(c) = to_bool(v); },
          [access](const RunConfig& c) { return from_bool(access(c)); }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back(text_key("data", "question TSV", &RunConfig::data));
  keys.push_back(text_key("tables", "table directory", &RunConfig::tables));
  keys.push_back(text_key("test_data", "held-out question TSV", &RunConfig::test_data));
  keys.push_back(text_key("test_tables", "held-out table directory (default: tables)", &RunConfig::test_tables));
  keys.push_back(text_key("lexicon", "lexicon TSV (default: built-in)", &RunConfig::lexicon));
  keys.push_back(text_key("checkpoint", "model checkpoint path", &RunConfig::checkpoint));
  keys.push_back(text_key("report", "metrics report JSON path; a .csv is written alongside", &RunConfig::report));
  keys.push_back(text_key("predictions", "per-example predictions (JSON lines)", &RunConfig::predictions));
  keys.push_back(text_key("dump_beams", "final beams per example (JSON lines)", &RunConfig::dump_beams));
  keys.push_back(text_key("out", "synth output directory", &RunConfig::out));

  keys.push_back({"algo", "update: mml, merit:<beta|inf>, reinforce, offpg, mmr, maver, mix:<w>,<q>",
                  [](RunConfig& c, const std::string& v) { c.train.update = UpdateSpec::parse(v); },
                  [](const RunConfig& c) { return c.train.update.to_string(); }});
  keys.push_back(real_key("lr", "learning rate", [](auto& c) -> auto& { return c.train.learning_rate; }));
  keys.push_back(size_key("epochs", "training epochs", [](auto& c) -> auto& { return c.train.epochs; }));
  keys.push_back({"seed", "random seed (training, audit and synth)",
                  [](RunConfig& c, const std::string& v) { c.train.seed = to_unsigned(v); },
                  [](const RunConfig& c) { return std::to_string(c.train.seed); }});
  keys.push_back(real_key("dev_fraction", "share of sequences held out for model selection",
                          [](auto& c) -> auto& { return c.train.dev_fraction; }));
  keys.push_back(bool_key("refit", "retrain on train+dev for the best epoch count",
                          [](auto& c) -> auto& { return c.train.refit; }));
  keys.push_back(bool_key("clip", "clip update norms", [](auto& c) -> auto& { return c.train.clip; }));
  keys.push_back(real_key("clip_norm", "update norm limit", [](auto& c) -> auto& { return c.train.clip_norm; }));
  keys.push_back(real_key("softening", "reward multiplier of the off-policy exploration policy",
                          [](auto& c) -> auto& { return c.train.exploration_softening; }));
  keys.push_back(real_key("init_scale", "half-width of the uniform initial weights",
                          [](auto& c) -> auto& { return c.train.init_scale; }));
  keys.push_back(bool_key("on_policy_reinforce", "REINFORCE searches without reward guidance",
                          [](auto& c) -> auto& { return c.train.on_policy_reinforce; }));

  keys.push_back(size_key("beam", "beam size", [](auto& c) -> auto& { return c.train.search.beam_size; }));
  keys.push_back(size_key("max_actions", "maximum program length in actions",
                          [](auto& c) -> auto& { return c.train.search.max_actions; }));
  keys.push_back(size_key("max_conditions", "maximum condition atoms per program",
                          [](auto& c) -> auto& { return c.train.search.max_conditions; }));
  keys.push_back({"lambda", "reward weight in the search ranking (inf: reward first)",
                  [](RunConfig& c, const std::string& v) {
                    const double l = to_real(v);
                    c.train.search.lambda_infinite = std::isinf(l);
                    c.train.search.lambda = std::isinf(l) ? 0.0 : l;
                  },
                  [](const RunConfig& c) {
                    return c.train.search.lambda_infinite ? std::string("inf") : from_real(c.train.search.lambda);
                  }});
  keys.push_back(bool_key("shaping", "policy shaping during training search",
                          [](auto& c) -> auto& { return c.train.search.shaping_enabled; }));
  keys.push_back(real_key("eta", "critique confidence", [](auto& c) -> auto& { return c.train.search.eta; }));
  keys.push_back(bool_key("model_shaping", "add the critique to the model score (ablation)",
                          [](auto& c) -> auto& { return c.train.search.model_shaping; }));

  keys.push_back(size_key("audit_sample", "examples sampled by the spurious audit",
                          [](auto& c) -> auto& { return c.audit_sample; }));
  keys.push_back(size_key("audit_trials", "row permutations per audited program",
                          [](auto& c) -> auto& { return c.audit_trials; }));

  keys.push_back(size_key("sequences", "synth: number of sequences",
                          [](auto& c) -> auto& { return c.synth.sequences; }));
  keys.push_back(size_key("rows", "synth: rows per table", [](auto& c) -> auto& { return c.synth.rows; }));
  keys.push_back(real_key("planted", "synth: share of superlative tables with an index cue",
                          [](auto& c) -> auto& { return c.synth.planted_fraction; }));
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : config_keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += k + "=" + v + "\n";
  return out;
}

}  // namespace tabparse
