#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "geli/corpus.hpp"
#include "geli/llm.hpp"
#include "geli/reward_model.hpp"

namespace geli {

// Min/max of global rewards over a corpus (the normalization statistics
// for score-based redistribution). Throws Error{EmptySplit}.
struct CorpusStats {
  double r_min = 0.0;
  double r_max = 0.0;
};
CorpusStats reward_range(const Corpus& corpus);

// Every agent turn gets R / (agent-turn count); the last share absorbs the
// rounding crumbs so the per-trajectory sum (in turn order) is exactly R
// and the recorded residual is exactly 0. Throws Error{NoAgentTurns}.
RewardAssignment uniform_decompose(const Trajectory& traj);

// Every agent turn gets the min-max-normalized session score
// (R - R_min) / (R_max - R_min); not sum-preserving, residual recorded.
// Throws Error{DegenerateCorpus} when R_max == R_min.
RewardAssignment ircr_decompose(const Trajectory& traj, const CorpusStats& stats);

// Sequence return predictor g: accumulates per-utterance hashed features
// over a dialogue prefix and maps the running sum through a trained affine
// head. Deterministic given parameters and input.
struct ReturnPredictorHyper {
  double learning_rate = 0.5;  // normalized by the largest prefix norm
  int epochs = 500;
  std::uint64_t seed = 0;
};

struct ReturnPredictor {
  Featurizer featurizer{.context_window = 0, .hash_dim = 1024, .n_gram_max = 1};
  std::vector<double> weights;  // hash_dim, zero-initialized
  double bias = 0.0;
  ReturnPredictorHyper hyper;
  std::vector<double> loss_curve;  // full-train MSE; entry 0 = pre-training
};

ReturnPredictor make_return_predictor(const Featurizer& f);

// g(turns[0..through_turn]); evaluates the affine head on the prefix's
// summed per-utterance features. through_turn is an inclusive turn index.
double predict_prefix(const ReturnPredictor& g, const Trajectory& traj,
                      int through_turn);
// Full prefix = through the last turn.
double predict_return(const ReturnPredictor& g, const Trajectory& traj);

// Full-batch gradient descent regressing the session score from whole-
// dialogue feature sums. The step size is divided by the largest squared
// prefix-feature norm so the recorded loss curve is non-increasing for
// learning_rate < 1 regardless of dialogue length. Throws Error{EmptySplit}.
ReturnPredictor train_return_predictor(const Corpus& corpus,
                                       const ReturnPredictorHyper& hyper = {});

// r_t = g(prefix through t) - g(prefix through the previous agent turn),
// with g(empty prefix) := 0; every agent turn annotated, so the rewards
// telescope to g(prefix through the last agent turn).
RewardAssignment rudder_decompose(const Trajectory& traj,
                                  const ReturnPredictor& g);

// Predictor persistence: JSON blob with a schema-version field.
std::string to_json(const ReturnPredictor& g);
ReturnPredictor return_predictor_from_json(const std::string& text);

// Randomized-subset return regression: minimizes
//   E_tau E_{S subset of agent turns, |S|=K} [(R - (T/K) * sum_S r(s,a))^2]
// by seeded SGD; K is clamped to the trajectory's agent-turn count.
struct RRDConfig {
  int K = 32;
  int batch_trajectories = 4;
  int iterations = 2000;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

// Throws Error{BadK} (K < 1) and Error{EmptySplit}.
RewardModel train_rrd(const Corpus& corpus, const RewardModel& init,
                      const RRDConfig& cfg);

// Monte Carlo estimate of the surrogate with one subset draw per
// trajectory. With K >= every agent-turn count this equals the global loss
// (same summation order, scale factor exactly 1).
double rrd_surrogate(const Corpus& corpus, const RewardModel& m, int K,
                     std::uint64_t seed);

namespace detail {
// Uniform K-subset without replacement, returned in ascending order.
std::vector<int> sample_subset(int count, int k, std::mt19937_64& rng);
}  // namespace detail

// Constant references: c = mean of session scores, or the most frequent
// score after rounding to the nearest integer (ties toward the smaller
// integer). The returned generator assigns c/T to each agent turn with the
// last share compensated so every trajectory sums to exactly c.
struct ConstantBaseline {
  Method kind = Method::Mean;  // Mean or Mode
  double constant = 0.0;

  RewardAssignment operator()(const Trajectory& traj) const;
};

// kind must be Mean or Mode (Error{BadValue}); Error{EmptySplit} on an
// empty corpus.
ConstantBaseline constant_baseline(const Corpus& corpus, Method kind);

}  // namespace geli
