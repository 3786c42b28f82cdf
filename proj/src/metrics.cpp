#include "geli/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"
#include "geli/util.hpp"

namespace geli {
namespace {

using nlohmann::ordered_json;

Affect affect_of(const SummaryIndex& summaries, const std::string& id,
                 int turn_index) {
  auto it = summaries.find(id);
  if (it == summaries.end()) return Affect::Unknown;
  for (const auto& s : it->second) {
    if (s.turn_index == turn_index) return s.affect_positive;
  }
  return Affect::Unknown;
}

}  // namespace

Predictor replay_predictor(const std::vector<RewardAssignment>& assignments) {
  auto table = std::make_shared<
      std::map<std::string, std::map<int, double>>>();
  for (const auto& a : assignments) {
    auto& rewards = (*table)[a.trajectory_id];
    for (const auto& [index, reward] : a.rewards) rewards[index] = reward;
  }
  return [table](const Trajectory& traj, int turn_index) {
    auto it = table->find(traj.id);
    if (it == table->end()) return 0.0;
    auto jt = it->second.find(turn_index);
    return jt == it->second.end() ? 0.0 : jt->second;
  };
}

Predictor model_predictor(const RewardModel& m) {
  auto model = std::make_shared<RewardModel>(m);
  return [model](const Trajectory& traj, int turn_index) {
    return predict(*model, traj, turn_index);
  };
}

double prediction_residual(const Predictor& predictor, const Trajectory& traj) {
  double sum = 0.0;
  for (const auto& turn : agent_turns(traj)) {
    sum += predictor(traj, turn.index);
  }
  return traj.global_reward - sum;
}

double global_loss(const Predictor& predictor, const Corpus& corpus) {
  if (corpus.trajectories.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "cannot evaluate an empty corpus");
  }
  double sum = 0.0;
  for (const auto& traj : corpus.trajectories) {
    double residual = prediction_residual(predictor, traj);
    sum += residual * residual;
  }
  return sum / static_cast<double>(corpus.trajectories.size());
}

double local_difference(const Predictor& predictor, const Corpus& corpus,
                        const SummaryIndex& summaries) {
  double pos_sum = 0.0, neg_sum = 0.0;
  long pos_n = 0, neg_n = 0;
  for (const auto& traj : corpus.trajectories) {
    for (const auto& turn : agent_turns(traj)) {
      Affect affect = affect_of(summaries, traj.id, turn.index);
      if (affect == Affect::Unknown) continue;
      double value = predictor(traj, turn.index);
      if (affect == Affect::Positive) {
        pos_sum += value;
        ++pos_n;
      } else {
        neg_sum += value;
        ++neg_n;
      }
    }
  }
  if (pos_n == 0 || neg_n == 0) {
    throw Error(ErrorCode::InsufficientSupport,
                "need both affect classes, have " + std::to_string(pos_n) +
                    " positive and " + std::to_string(neg_n) + " non-positive");
  }
  return pos_sum / static_cast<double>(pos_n) -
         neg_sum / static_cast<double>(neg_n);
}

AffectCounts count_affect(const Corpus& corpus, const SummaryIndex& summaries) {
  AffectCounts counts;
  for (const auto& traj : corpus.trajectories) {
    for (const auto& turn : agent_turns(traj)) {
      switch (affect_of(summaries, traj.id, turn.index)) {
        case Affect::Positive: ++counts.positive; break;
        case Affect::NonPositive: ++counts.nonpositive; break;
        case Affect::Unknown: ++counts.unknown; break;
      }
    }
  }
  return counts;
}

double mean_consistency(const std::vector<RewardAssignment>& a,
                        const std::vector<RewardAssignment>& b,
                        const Corpus& corpus) {
  std::map<std::string, const RewardAssignment*> b_by_id;
  for (const auto& sample : b) b_by_id[sample.trajectory_id] = &sample;
  double sum = 0.0;
  int n = 0;
  for (const auto& sample : a) {
    auto it = b_by_id.find(sample.trajectory_id);
    if (it == b_by_id.end()) continue;
    sum += consistency(sample, *it->second, corpus.at(sample.trajectory_id));
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorCode::InsufficientSupport,
                "the two samples share no trajectory ids");
  }
  return sum / static_cast<double>(n);
}

MetricsReport evaluate(
    const std::string& method_name, const Predictor& predictor,
    const Corpus& corpus, const SummaryIndex& summaries,
    const std::optional<std::pair<std::vector<RewardAssignment>,
                                  std::vector<RewardAssignment>>>&
        consistency_pair) {
  MetricsReport report;
  report.method = method_name;
  report.global_loss = global_loss(predictor, corpus);
  report.delta_r_li = local_difference(predictor, corpus, summaries);
  AffectCounts counts = count_affect(corpus, summaries);
  report.n_positive_turns = counts.positive;
  report.n_nonpositive_turns = counts.nonpositive;
  report.n_unknown_turns = counts.unknown;
  if (consistency_pair) {
    report.consistency = mean_consistency(consistency_pair->first,
                                          consistency_pair->second, corpus);
  }
  switch (corpus.split) {
    case Split::RewardTrain: report.split = "REWARD_TRAIN"; break;
    case Split::Rl: report.split = "RL"; break;
    case Split::Test: report.split = "TEST"; break;
  }
  return report;
}

std::string format_agreement_percent(const std::vector<double>& agreements) {
  if (agreements.empty()) {
    throw Error(ErrorCode::InsufficientSupport, "no agreements to summarize");
  }
  double mean = 0.0;
  for (double a : agreements) mean += a;
  mean /= static_cast<double>(agreements.size());
  double var = 0.0;
  for (double a : agreements) var += (a - mean) * (a - mean);
  var /= static_cast<double>(agreements.size());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f%% ± %.2f%%", 100.0 * mean,
                100.0 * std::sqrt(var));
  return buf;
}

std::string reports_to_json(const std::vector<MetricsReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json obj;
    obj["method"] = r.method;
    obj["global_loss"] = r.global_loss;
    if (std::isfinite(r.delta_r_li)) {
      obj["delta_r_li"] = r.delta_r_li;
    } else {
      obj["delta_r_li"] = nullptr;  // insufficient affect support
    }
    obj["n_positive_turns"] = r.n_positive_turns;
    obj["n_nonpositive_turns"] = r.n_nonpositive_turns;
    obj["n_unknown_turns"] = r.n_unknown_turns;
    if (r.consistency) {
      obj["consistency"] = *r.consistency;
    }
    obj["split"] = r.split;
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<MetricsReport>& reports) {
  std::string out = "method,global_loss,local_difference\n";
  for (const auto& r : reports) {
    out += r.method;
    out += ',';
    out += format_score(r.global_loss);
    out += ',';
    if (std::isfinite(r.delta_r_li)) out += format_score(r.delta_r_li);
    out += '\n';
  }
  return out;
}

}  // namespace geli
