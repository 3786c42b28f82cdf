#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geli/corpus.hpp"
#include "geli/llm.hpp"

namespace geli {

// Sparse feature vector: (bucket index, value), indices strictly increasing.
using SparseVec = std::vector<std::pair<int, double>>;

// Hashed bag-of-n-grams encoder over the turn plus its preceding context.
// Tokens are role-tagged so agent and user words land in distinct buckets;
// n-grams never cross turn boundaries.
struct Featurizer {
  int context_window = 4;   // preceding turns included in the state
  int hash_dim = 1 << 14;   // D
  int n_gram_max = 2;
  std::uint64_t hash_seed = 0x9e3779b97f4a7c15ull;

  bool operator==(const Featurizer&) const = default;
};

enum class RegressorKind { Affine, Mlp };

struct TrainHyper {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
};

struct TrainingMeta {
  double learning_rate = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  double final_train_loss = 0.0;
  std::vector<double> loss_curve;  // full-train MSE; entry 0 = pre-training
};

// r_theta(s_t, a_t): featurizer plus an affine regressor, or a one-hidden-
// layer tanh MLP behind the kind switch. Zero-initialized affine by default.
struct RewardModel {
  Featurizer featurizer;
  RegressorKind kind = RegressorKind::Affine;
  std::vector<double> weights;  // affine: D; MLP: W1, row-major hidden x D
  double bias = 0.0;            // affine bias (unused by MLP)
  int hidden = 0;               // MLP width (0 for affine)
  std::vector<double> hidden_bias;      // MLP b1
  std::vector<double> output_weights;   // MLP w2
  double output_bias = 0.0;             // MLP b2
  TrainingMeta meta;
};

RewardModel make_affine_model(const Featurizer& f);
// Seeded small-gaussian init for the hidden layer (width default 64).
RewardModel make_mlp_model(const Featurizer& f, int hidden = 64,
                           std::uint64_t seed = 0);

struct TrainExample {
  SparseVec features;
  double target = 0.0;
};

// Dense hashed features for an agent turn (Error{NotAgentTurn} otherwise);
// L2-normalized unless all-zero.
std::vector<double> featurize(const Trajectory& traj, int turn_index,
                              const Featurizer& f);
// Features of a single utterance (role-tagged, L2-normalized unless
// all-zero): the per-turn unit consumed by the sequence return predictor.
SparseVec hash_utterance(std::string_view text, Speaker role,
                         const Featurizer& f);
SparseVec featurize_sparse(const Trajectory& traj, int turn_index,
                           const Featurizer& f);
// Unnormalized signed counts, for hand-checked collision accounting.
SparseVec featurize_raw_counts(const Trajectory& traj, int turn_index,
                               const Featurizer& f);

// Regressor output on featurize(traj, turn_index); never reads frames.
double predict(const RewardModel& m, const Trajectory& traj, int turn_index);
double predict_features(const RewardModel& m, const SparseVec& x);

// One example per agent turn of each assignment's trajectory; turns the
// assignment leaves unannotated get target 0 (the oracle flags only salient
// turns, so silence means "no credit").
std::vector<TrainExample> build_examples(
    const Corpus& corpus, const std::vector<RewardAssignment>& assignments,
    const Featurizer& f);

// Mini-batch gradient descent on mean squared error against the per-turn
// pseudo-rewards. Deterministic for a fixed seed. The returned model's meta
// holds the loss curve (entry per epoch plus the pre-training value).
// Throws Error{EmptyTrainingSet}.
RewardModel train(const RewardModel& m, const Corpus& corpus,
                  const std::vector<RewardAssignment>& assignments,
                  const TrainHyper& hyper);

// Same loop over prebuilt examples (used by train and by tests).
RewardModel train_examples(const RewardModel& m,
                           const std::vector<TrainExample>& examples,
                           const TrainHyper& hyper);

// Central-difference check of the MSE gradient on a random parameter
// subset; returns max |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8).
double gradient_check(const RewardModel& m,
                      const std::vector<TrainExample>& batch, double epsilon);

// Flat parameter indexing shared by training and the gradient checker.
std::size_t param_count(const RewardModel& m);
double get_param(const RewardModel& m, std::size_t i);
void set_param(RewardModel& m, std::size_t i, double v);

// grad += coef * d predict_features(m, x) / d params, in flat layout.
// Shared by MSE training and the randomized-subset regression.
void accumulate_prediction_gradient(const RewardModel& m, const SparseVec& x,
                                    double coef, std::vector<double>& grad);
// Gradient-descent update: params -= step * grad (zero entries skipped).
void apply_gradient(RewardModel& m, const std::vector<double>& grad,
                    double step);

double mse_loss(const RewardModel& m, const std::vector<TrainExample>& batch);

// Model file: JSON {schema_version, featurizer, kind, weights, ...}.
std::string to_json(const RewardModel& m);
RewardModel reward_model_from_json(const std::string& text);

// Loss curve as CSV "epoch,mse".
std::string loss_curve_csv(const RewardModel& m);

}  // namespace geli
