#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tabparse/features.hpp"
#include "tabparse/search.hpp"

namespace tabparse {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
double uniform01(Rng& rng);

enum class IntensityKind { MML, Meritocratic, Reinforce, OffPolicyPG, MMR, MAVER };
enum class CompetingKind { ModelPolicy, MostViolating, ViolationUniform };

/// An (intensity, competing distribution) pair of the generalized update
///
///   Δ(K) = Σ_y w(y) (∇score(y) − Σ_y' q(y') ∇score(y'))
///
/// Strings: `mml`, `merit:<beta|inf>`, `reinforce`, `offpg`, `mmr`, `maver`,
/// `mix:<intensity>,<competing>` where each side names one of the
/// algorithms above (the competing side may also be `model`,
/// `most-violating` or `violation-uniform`).
struct UpdateSpec {
  IntensityKind intensity = IntensityKind::MAVER;
  CompetingKind competing = CompetingKind::ViolationUniform;
  double beta = 1.0;  // Meritocratic only; +inf allowed

  static UpdateSpec parse(std::string_view text);
  static UpdateSpec mml() { return {IntensityKind::MML, CompetingKind::ModelPolicy, 1.0}; }
  static UpdateSpec meritocratic(double beta) {
    return {IntensityKind::Meritocratic, CompetingKind::ModelPolicy, beta};
  }
  static UpdateSpec reinforce() { return {IntensityKind::Reinforce, CompetingKind::ModelPolicy, 1.0}; }
  static UpdateSpec off_policy() { return {IntensityKind::OffPolicyPG, CompetingKind::ModelPolicy, 1.0}; }
  static UpdateSpec mmr() { return {IntensityKind::MMR, CompetingKind::MostViolating, 1.0}; }
  static UpdateSpec maver() { return {IntensityKind::MAVER, CompetingKind::ViolationUniform, 1.0}; }

  std::string to_string() const;
  friend bool operator==(const UpdateSpec&, const UpdateSpec&) = default;
};

enum class UpdateStatus {
  Applied,
  NoCompatible,  // intensity needs a compatible program and K has none
  NoViolation,   // competing distribution over an empty violation set
};

std::string_view status_name(UpdateStatus status);

/// Everything one update reads. `exploration` (u) and `score_offset` may be
/// left empty: u then defaults to the model policy, offsets to zero.
struct UpdateContext {
  const CandidateSet& candidates;
  const ParamVector& theta;
  Rng& rng;
  Eigen::VectorXd exploration;
  Eigen::VectorXd score_offset;
};

/// Per-candidate quantities derived from a context.
struct CandidateView {
  FeatureMatrix features;
  Eigen::VectorXd scores;
  Eigen::VectorXd rewards;
  std::vector<bool> compatible;
  std::vector<std::string> serializations;

  static CandidateView of(const CandidateSet& candidates, const ParamVector& theta,
                          const Eigen::VectorXd& score_offset = {});
  Eigen::VectorXd model_policy() const;
};

/// Jaccard of the program's answer against gold.
double reward(const Program& program, const Table& table, const AnswerSet& gold,
              const std::optional<AnswerSet>& prev_answer = std::nullopt);

/// Highest-scoring compatible program, smaller serialization on ties.
std::optional<std::size_t> reference_program(const CandidateView& view);
std::optional<std::size_t> reference_program(const CandidateSet& candidates, const ParamVector& theta);

/// { y' != y* : score(y') - R(y') >= score(y*) - R(y*) }
std::vector<std::size_t> violation_set(const CandidateView& view, std::size_t reference);

/// argmax over y' != y* of score(y') - R(y'); nullopt unless it violates.
std::optional<std::size_t> most_violating(const CandidateView& view, std::size_t reference);

struct Intensity {
  Eigen::VectorXd weights;
  UpdateStatus status = UpdateStatus::Applied;
  std::optional<std::size_t> sampled;  // REINFORCE / off-policy draw
};

struct Competing {
  Eigen::VectorXd distribution;
  UpdateStatus status = UpdateStatus::Applied;
};

Intensity intensity(const UpdateSpec& spec, const UpdateContext& ctx);
Intensity intensity(const UpdateSpec& spec, const UpdateContext& ctx, const CandidateView& view);
Competing competing(const UpdateSpec& spec, const UpdateContext& ctx);
Competing competing(const UpdateSpec& spec, const UpdateContext& ctx, const CandidateView& view);

struct UpdateResult {
  FeatureVector delta;
  UpdateStatus status = UpdateStatus::Applied;
  std::optional<std::size_t> sampled;
};

/// The generalized update Δ(K); zero on skip signals. Throws
/// std::domain_error when a non-finite value appears.
UpdateResult generalized_update(const UpdateSpec& spec, const UpdateContext& ctx);

/// Inverse-CDF draw over the support sorted by serialization.
std::size_t sample_from(const Eigen::VectorXd& distribution,
                        const std::vector<std::string>& serializations, Rng& rng);

/// Off-policy exploration policy over K: u(y) ∝ exp(softening * R(y) + s(y)),
/// where s includes eta * critique when shaping is on.
Eigen::VectorXd exploration_policy(const CandidateSet& candidates, const ParamVector& theta,
                                   double softening, bool shaping, double eta,
                                   const Eigen::VectorXd& score_offset = {});

}  // namespace tabparse
