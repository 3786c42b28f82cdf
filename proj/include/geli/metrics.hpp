#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geli/corpus.hpp"
#include "geli/descriptors.hpp"
#include "geli/llm.hpp"
#include "geli/reward_model.hpp"

namespace geli {

// Per-turn reward source: anything scoring an agent turn of a trajectory.
using Predictor = std::function<double(const Trajectory&, int turn_index)>;

// Summaries keyed by trajectory id, one entry per agent turn (ascending),
// as produced by summarize_corpus().
using SummaryIndex = std::map<std::string, std::vector<TurnFeatureSummary>>;

struct MetricsReport {
  std::string method;
  double global_loss = 0.0;
  double delta_r_li = 0.0;
  int n_positive_turns = 0;
  int n_nonpositive_turns = 0;
  int n_unknown_turns = 0;
  std::optional<double> consistency;
  std::string split;
};

// Table lookup over recorded assignments; turns (or whole trajectories)
// absent from the assignments score 0, matching zero-fill training.
Predictor replay_predictor(const std::vector<RewardAssignment>& assignments);
Predictor model_predictor(const RewardModel& m);

// R_GE minus the sum of the predictor over the trajectory's agent turns,
// summed in turn order.
double prediction_residual(const Predictor& predictor, const Trajectory& traj);

// Mean over trajectories of the squared prediction residual.
// Throws Error{EmptyCorpus}.
double global_loss(const Predictor& predictor, const Corpus& corpus);

// Pooled conditional-mean difference: mean prediction on POSITIVE-affect
// agent turns minus mean on NON_POSITIVE ones; UNKNOWN turns are excluded
// from both sides. Throws Error{InsufficientSupport} when either class is
// empty.
double local_difference(const Predictor& predictor, const Corpus& corpus,
                        const SummaryIndex& summaries);

// Affect-class counts over the corpus's agent turns.
struct AffectCounts {
  int positive = 0;
  int nonpositive = 0;
  int unknown = 0;
};
AffectCounts count_affect(const Corpus& corpus, const SummaryIndex& summaries);

// Full report row. When a pair of assignment samples is supplied, the
// consistency field is the mean two-sample agreement over the trajectory
// ids present in both samples.
MetricsReport evaluate(
    const std::string& method_name, const Predictor& predictor,
    const Corpus& corpus, const SummaryIndex& summaries,
    const std::optional<std::pair<std::vector<RewardAssignment>,
                                  std::vector<RewardAssignment>>>&
        consistency_pair = std::nullopt);

// Mean agreement between two assignment samples over the ids present in
// both, using each trajectory's agent-turn count from the corpus.
double mean_consistency(const std::vector<RewardAssignment>& a,
                        const std::vector<RewardAssignment>& b,
                        const Corpus& corpus);

// "NN.NN% ± NN.NN%": the appendix-style agreement summary over a sample
// of per-trajectory agreements (population std).
std::string format_agreement_percent(const std::vector<double>& agreements);

// Report files: JSON array of rows plus a CSV with the method,
// global_loss, local_difference columns (delta empty when unavailable).
std::string reports_to_json(const std::vector<MetricsReport>& reports);
std::string reports_to_csv(const std::vector<MetricsReport>& reports);

}  // namespace geli
