#include "tabparse/updates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tabparse/distribution.hpp"
#include "tabparse/text.hpp"

namespace tabparse {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

struct IntensityName {
  std::string_view name;
  IntensityKind kind;
  CompetingKind competing;
};

constexpr IntensityName kAlgorithms[] = {
    {"mml", IntensityKind::MML, CompetingKind::ModelPolicy},
    {"reinforce", IntensityKind::Reinforce, CompetingKind::ModelPolicy},
    {"offpg", IntensityKind::OffPolicyPG, CompetingKind::ModelPolicy},
    {"mmr", IntensityKind::MMR, CompetingKind::MostViolating},
    {"maver", IntensityKind::MAVER, CompetingKind::ViolationUniform},
};

double parse_beta(std::string_view text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  const auto v = parse_number(std::string(text));
  if (!v || !(*v >= 0.0)) throw std::invalid_argument("invalid meritocratic beta '" + std::string(text) + "'");
  return *v;
}

UpdateSpec parse_algorithm(std::string_view text) {
  if (text.starts_with("merit:")) return UpdateSpec::meritocratic(parse_beta(text.substr(6)));
  for (const auto& a : kAlgorithms) {
    if (a.name == text) return {a.kind, a.competing, 1.0};
  }
  throw std::invalid_argument("unknown update algorithm '" + std::string(text) + "'");
}

CompetingKind parse_competing(std::string_view text) {
  if (text == "model") return CompetingKind::ModelPolicy;
  if (text == "most-violating") return CompetingKind::MostViolating;
  if (text == "violation-uniform") return CompetingKind::ViolationUniform;
  return parse_algorithm(text).competing;
}

std::string intensity_string(const UpdateSpec& spec) {
  if (spec.intensity == IntensityKind::Meritocratic) {
    return "merit:" + (std::isinf(spec.beta) ? std::string("inf") : format_double(spec.beta));
  }
  for (const auto& a : kAlgorithms) {
    if (a.kind == spec.intensity) return std::string(a.name);
  }
  return "?";
}

std::string_view competing_string(CompetingKind kind) {
  switch (kind) {
    case CompetingKind::ModelPolicy: return "model";
    case CompetingKind::MostViolating: return "most-violating";
    case CompetingKind::ViolationUniform: return "violation-uniform";
  }
  return "?";
}

CompetingKind canonical_competing(IntensityKind kind) {
  for (const auto& a : kAlgorithms) {
    if (a.kind == kind) return a.competing;
  }
  return CompetingKind::ModelPolicy;  // Meritocratic
}

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

UpdateSpec UpdateSpec::parse(std::string_view text) {
  if (text.starts_with("mix:")) {
    const auto body = text.substr(4);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) {
      throw std::invalid_argument("mix needs '<intensity>,<competing>': '" + std::string(text) + "'");
    }
    UpdateSpec spec = parse_algorithm(body.substr(0, comma));
    spec.competing = parse_competing(body.substr(comma + 1));
    return spec;
  }
  return parse_algorithm(text);
}

std::string UpdateSpec::to_string() const {
  const std::string head = intensity_string(*this);
  if (competing == canonical_competing(intensity)) return head;
  return "mix:" + head + "," + std::string(competing_string(competing));
}

std::string_view status_name(UpdateStatus status) {
  switch (status) {
    case UpdateStatus::Applied: return "applied";
    case UpdateStatus::NoCompatible: return "no_compatible";
    case UpdateStatus::NoViolation: return "no_violation";
  }
  return "?";
}

CandidateView CandidateView::of(const CandidateSet& candidates, const ParamVector& theta,
                                const Eigen::VectorXd& score_offset) {
  CandidateView v;
  std::vector<FeatureVector> features;
  features.reserve(candidates.size());
  for (const auto& c : candidates.programs) features.push_back(c.features);
  v.features = FeatureMatrix::from(features);
  v.scores = v.features.rows * v.features.weights(theta);
  if (score_offset.size() != 0) {
    if (score_offset.size() != v.scores.size()) throw std::invalid_argument("score offset size mismatch");
    v.scores += score_offset;
  }
  v.rewards.resize(idx(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates.programs[i];
    v.rewards[idx(i)] = c.reward;
    v.compatible.push_back(c.compatible);
    v.serializations.push_back(c.serialization);
  }
  return v;
}

Eigen::VectorXd CandidateView::model_policy() const { return softmax(scores); }

double reward(const Program& program, const Table& table, const AnswerSet& gold,
              const std::optional<AnswerSet>& prev_answer) {
  return jaccard(execute(program, table, prev_answer), gold);
}

std::optional<std::size_t> reference_program(const CandidateView& view) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < view.compatible.size(); ++i) {
    if (!view.compatible[i]) continue;
    if (!best || view.scores[idx(i)] > view.scores[idx(*best)] ||
        (view.scores[idx(i)] == view.scores[idx(*best)] &&
         view.serializations[i] < view.serializations[*best])) {
      best = i;
    }
  }
  return best;
}

std::optional<std::size_t> reference_program(const CandidateSet& candidates, const ParamVector& theta) {
  return reference_program(CandidateView::of(candidates, theta));
}

std::vector<std::size_t> violation_set(const CandidateView& view, std::size_t reference) {
  const double bar = view.scores[idx(reference)] - view.rewards[idx(reference)];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < view.serializations.size(); ++i) {
    if (i == reference) continue;
    if (view.scores[idx(i)] - view.rewards[idx(i)] >= bar) out.push_back(i);
  }
  return out;
}

std::optional<std::size_t> most_violating(const CandidateView& view, std::size_t reference) {
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (std::size_t i = 0; i < view.serializations.size(); ++i) {
    if (i == reference) continue;
    const double value = view.scores[idx(i)] - view.rewards[idx(i)];
    if (!best || value > best_value ||
        (value == best_value && view.serializations[i] < view.serializations[*best])) {
      best = i;
      best_value = value;
    }
  }
  const double bar = view.scores[idx(reference)] - view.rewards[idx(reference)];
  if (best && best_value >= bar) return best;
  return std::nullopt;
}

std::size_t sample_from(const Eigen::VectorXd& distribution,
                        const std::vector<std::string>& serializations, Rng& rng) {
  if (distribution.size() == 0 || static_cast<std::size_t>(distribution.size()) != serializations.size()) {
    throw std::invalid_argument("sample_from: distribution and support differ in size");
  }
  if (std::abs(distribution.sum() - 1.0) > 1e-9 || (distribution.array() < 0.0).any()) {
    throw std::invalid_argument("sample_from: not a probability distribution");
  }
  std::vector<std::size_t> order(serializations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return serializations[a] < serializations[b]; });
  const double u = uniform01(rng);
  double cdf = 0.0;
  std::optional<std::size_t> last_positive;
  for (const auto i : order) {
    const double p = distribution[idx(i)];
    if (p <= 0.0) continue;
    cdf += p;
    last_positive = i;
    if (u < cdf) return i;
  }
  return *last_positive;  // rounding left the cdf just below u
}

Intensity intensity(const UpdateSpec& spec, const UpdateContext& ctx) {
  return intensity(spec, ctx, CandidateView::of(ctx.candidates, ctx.theta, ctx.score_offset));
}

Intensity intensity(const UpdateSpec& spec, const UpdateContext& ctx, const CandidateView& view) {
  const auto n = idx(ctx.candidates.size());
  if (n == 0) throw std::invalid_argument("intensity: empty candidate set");
  Intensity out;
  out.weights = Eigen::VectorXd::Zero(n);
  const bool any_compatible = std::find(view.compatible.begin(), view.compatible.end(), true) !=
                              view.compatible.end();

  switch (spec.intensity) {
    case IntensityKind::MML: {
      if (!any_compatible) break;
      const Eigen::VectorXd p = view.model_policy();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (view.compatible[static_cast<std::size_t>(i)]) out.weights[i] = p[i];
      }
      out.weights /= out.weights.sum();
      return out;
    }
    case IntensityKind::Meritocratic: {
      if (!any_compatible) break;
      if (std::isinf(spec.beta)) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
          if (view.compatible[static_cast<std::size_t>(i)]) top = std::max(top, view.scores[i]);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          if (view.compatible[static_cast<std::size_t>(i)] && view.scores[i] == top) out.weights[i] = 1.0;
        }
        out.weights /= out.weights.sum();
        return out;
      }
      // p^beta renormalized over the compatible set is a softmax of beta * score.
      Eigen::VectorXd logits =
          Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
      for (Eigen::Index i = 0; i < n; ++i) {
        if (view.compatible[static_cast<std::size_t>(i)]) logits[i] = spec.beta * view.scores[i];
      }
      out.weights = softmax(logits);
      return out;
    }
    case IntensityKind::Reinforce: {
      const std::size_t y = sample_from(view.model_policy(), view.serializations, ctx.rng);
      out.weights[idx(y)] = view.rewards[idx(y)];
      out.sampled = y;
      return out;
    }
    case IntensityKind::OffPolicyPG: {
      const Eigen::VectorXd p = view.model_policy();
      const Eigen::VectorXd& u = ctx.exploration.size() != 0 ? ctx.exploration : p;
      if (u.size() != n) throw std::invalid_argument("exploration policy size mismatch");
      const std::size_t y = sample_from(u, view.serializations, ctx.rng);
      out.weights[idx(y)] = view.rewards[idx(y)] * p[idx(y)] / u[idx(y)];
      out.sampled = y;
      return out;
    }
    case IntensityKind::MMR:
    case IntensityKind::MAVER: {
      const auto ref = reference_program(view);
      if (!ref) break;
      out.weights[idx(*ref)] = 1.0;
      return out;
    }
  }
  out.status = UpdateStatus::NoCompatible;
  return out;
}

Competing competing(const UpdateSpec& spec, const UpdateContext& ctx) {
  return competing(spec, ctx, CandidateView::of(ctx.candidates, ctx.theta, ctx.score_offset));
}

Competing competing(const UpdateSpec& spec, const UpdateContext& ctx, const CandidateView& view) {
  const auto n = idx(ctx.candidates.size());
  if (n == 0) throw std::invalid_argument("competing: empty candidate set");
  Competing out;
  out.distribution = Eigen::VectorXd::Zero(n);
  if (spec.competing == CompetingKind::ModelPolicy) {
    out.distribution = view.model_policy();
    return out;
  }
  const auto ref = reference_program(view);
  if (!ref) {
    out.status = UpdateStatus::NoCompatible;
    return out;
  }
  if (spec.competing == CompetingKind::MostViolating) {
    if (const auto bar = most_violating(view, *ref)) {
      out.distribution[idx(*bar)] = 1.0;
      return out;
    }
  } else {
    const auto v = violation_set(view, *ref);
    if (!v.empty()) {
      for (const auto i : v) out.distribution[idx(i)] = 1.0 / static_cast<double>(v.size());
      return out;
    }
  }
  out.status = UpdateStatus::NoViolation;
  return out;
}

UpdateResult generalized_update(const UpdateSpec& spec, const UpdateContext& ctx) {
  if (ctx.candidates.empty()) return {{}, UpdateStatus::NoCompatible, std::nullopt};
  const CandidateView view = CandidateView::of(ctx.candidates, ctx.theta, ctx.score_offset);
  if (!view.scores.allFinite()) throw std::domain_error("non-finite program score");

  UpdateResult result;
  const Intensity w = intensity(spec, ctx, view);
  result.sampled = w.sampled;
  if (w.status != UpdateStatus::Applied) {
    result.status = w.status;
    return result;
  }
  const Competing q = competing(spec, ctx, view);
  if (q.status != UpdateStatus::Applied) {
    result.status = q.status;
    return result;
  }
  const Eigen::VectorXd coefficients = w.weights - w.weights.sum() * q.distribution;
  const Eigen::VectorXd delta = view.features.rows.transpose() * coefficients;
  if (!delta.allFinite()) throw std::domain_error("non-finite update");
  result.delta = view.features.to_features(delta);
  return result;
}

Eigen::VectorXd exploration_policy(const CandidateSet& candidates, const ParamVector& theta,
                                   double softening, bool shaping, double eta,
                                   const Eigen::VectorXd& score_offset) {
  const CandidateView view = CandidateView::of(candidates, theta, score_offset);
  Eigen::VectorXd logits = softening * view.rewards + view.scores;
  if (shaping) {
    for (std::size_t i = 0; i < candidates.size(); ++i) logits[idx(i)] += eta * candidates.programs[i].critique;
  }
  return softmax(logits);
}

}  // namespace tabparse
