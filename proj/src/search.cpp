#include "tabparse/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace tabparse {

void SearchConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (max_actions < 1) throw std::invalid_argument("max_actions must be >= 1");
  if (!lambda_infinite && !(lambda >= 0.0 && std::isfinite(lambda))) {
    throw std::invalid_argument("finite lambda must be >= 0");
  }
  if (!std::isfinite(eta) || eta < 0.0) throw std::invalid_argument("eta must be finite and >= 0");
}

bool ranks_before(const RankKey& a, const RankKey& b) {
  if (a.primary != b.primary) return a.primary > b.primary;
  if (a.secondary != b.secondary) return a.secondary > b.secondary;
  return a.serialization < b.serialization;
}

RankKey rank_key(const std::string& serialization, double reward, double score, double critique,
                 const SearchConfig& config) {
  const double shaped = config.shaping_enabled ? score + config.eta * critique : score;
  if (config.lambda_infinite) return {reward, shaped, serialization};
  return {0.0, config.lambda * reward + shaped, serialization};
}

namespace {

struct ActionInfo {
  double weight = 0.0;  // theta . action features
  std::set<std::string> tokens;
};

struct Node {
  ProgramState state;
  double action_score = 0.0;
  std::set<std::string> tokens;
  double score = 0.0;
  double reward = 0.0;
  double critique = 0.0;
  RankKey key;
};

}  // namespace

CandidateSet beam_search(const Example& example, const Table& table, const ParamVector& theta,
                         const Lexicon& lexicon, const SearchConfig& config,
                         const SearchInputs& inputs) {
  config.validate();
  const bool has_prev = inputs.prev_answer.has_value();
  const ActionSpace space(table, has_prev ? example.position : 0, example.question_tokens,
                          config.max_conditions);
  const FeatureContext fctx(example.question_tokens, table, example.position);
  const std::set<std::string> question(example.question_tokens.begin(), example.question_tokens.end());
  const double recall_weight = theta.get("recall");

  std::map<Action, ActionInfo> cache;
  auto info_for = [&](const Action& a) -> const ActionInfo& {
    auto it = cache.find(a);
    if (it == cache.end()) {
      ActionInfo info;
      info.weight = theta.dot(fctx.action_features(a));
      info.tokens = action_tokens(a, table);
      it = cache.emplace(a, std::move(info)).first;
    }
    return it->second;
  };

  auto evaluate = [&](Node& n) {
    n.score = n.action_score + recall_weight * fctx.recall(n.tokens);
    n.critique = match_score(question, n.tokens) +
                 co_occur_score(question, program_keywords(n.state), lexicon);
    if (config.model_shaping) n.score += config.eta * n.critique;
    n.reward = inputs.use_gold
                   ? jaccard(execute(n.state, table, inputs.prev_answer), example.gold_answer)
                   : 0.0;
    n.key = rank_key(serialize(n.state, table), n.reward, n.score, n.critique, config);
  };

  std::vector<Node> beam(1);
  std::map<std::string, ProgramState> completed;

  for (std::size_t step = 0; step < config.max_actions && !beam.empty(); ++step) {
    std::vector<Node> children;
    std::unordered_set<std::string> seen;
    for (const auto& node : beam) {
      for (const auto& a : legal_actions(node.state, space)) {
        const ActionInfo& info = info_for(a);
        Node child;
        child.state = apply_action(node.state, a);
        child.action_score = node.action_score + info.weight;
        child.tokens = node.tokens;
        child.tokens.insert(info.tokens.begin(), info.tokens.end());
        evaluate(child);
        if (!seen.insert(child.key.serialization).second) continue;
        if (child.state.complete) {
          completed.try_emplace(child.key.serialization, std::move(child.state));
        } else {
          children.push_back(std::move(child));
        }
      }
    }
    const std::size_t keep = std::min(children.size(), config.beam_size);
    std::partial_sort(children.begin(), children.begin() + static_cast<std::ptrdiff_t>(keep),
                      children.end(),
                      [](const Node& a, const Node& b) { return ranks_before(a.key, b.key); });
    children.resize(keep);
    beam = std::move(children);
  }

  CandidateSet out;
  std::vector<RankKey> keys;
  for (auto& [text, program] : completed) {
    Candidate c;
    c.serialization = text;
    c.features = fctx.featurize(program);
    c.critique = critique_score(question, program, table, lexicon);
    c.score = theta.dot(c.features) + (config.model_shaping ? config.eta * c.critique : 0.0);
    c.answer = execute(program, table, inputs.prev_answer);
    if (inputs.use_gold) {
      c.reward = jaccard(c.answer, example.gold_answer);
      c.compatible = exact_match(c.answer, example.gold_answer);
    }
    c.program = std::move(program);
    keys.push_back(rank_key(c.serialization, c.reward, c.score, c.critique, config));
    out.programs.push_back(std::move(c));
  }

  std::vector<std::size_t> order(out.programs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ranks_before(keys[a], keys[b]); });
  std::vector<Candidate> sorted;
  sorted.reserve(order.size());
  for (const auto i : order) sorted.push_back(std::move(out.programs[i]));
  out.programs = std::move(sorted);
  for (std::size_t i = 0; i < out.programs.size(); ++i) {
    if (out.programs[i].compatible) out.compatible.push_back(i);
  }
  return out;
}

std::string beam_dump_line(const Example& example, const CandidateSet& candidates) {
  nlohmann::json beam = nlohmann::json::array();
  for (const auto& c : candidates.programs) {
    beam.push_back({{"program", c.serialization},
                    {"score", c.score},
                    {"reward", c.reward},
                    {"critique", c.critique},
                    {"compatible", c.compatible}});
  }
  nlohmann::json record = {{"sequence_id", example.sequence_id()},
                           {"position", example.position},
                           {"question", example.question},
                           {"beam", std::move(beam)}};
  return record.dump();
}

}  // namespace tabparse
