#include "geli/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"
#include "geli/util.hpp"

namespace geli {
namespace {

using nlohmann::ordered_json;

// Spread `total` over the agent turns as total/T with the final share
// compensated; summing the map in key order then reproduces `total` exactly
// (the compensation step is exact because the partial sum stays within a
// factor of two of the total).
std::map<int, double> constant_shares(const std::vector<Turn>& agents,
                                      double total) {
  std::map<int, double> rewards;
  const double share = total / static_cast<double>(agents.size());
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < agents.size(); ++i) {
    rewards[agents[i].index] = share;
    partial += share;
  }
  rewards[agents.back().index] = total - partial;
  return rewards;
}

double sum_in_order(const std::map<int, double>& rewards) {
  double sum = 0.0;
  for (const auto& [index, reward] : rewards) sum += reward;
  return sum;
}

std::vector<double> prefix_feature_sum(const ReturnPredictor& g,
                                       const Trajectory& traj,
                                       int through_turn) {
  std::vector<double> acc(g.featurizer.hash_dim, 0.0);
  for (int t = 0; t <= through_turn && t < static_cast<int>(traj.turns.size());
       ++t) {
    const Turn& turn = traj.turns[t];
    for (const auto& [i, v] :
         hash_utterance(turn.text, turn.speaker, g.featurizer)) {
      acc[i] += v;
    }
  }
  return acc;
}

}  // namespace

CorpusStats reward_range(const Corpus& corpus) {
  if (corpus.trajectories.empty()) {
    throw Error(ErrorCode::EmptySplit, "corpus has no trajectories");
  }
  CorpusStats stats{corpus.trajectories.front().global_reward,
                    corpus.trajectories.front().global_reward};
  for (const auto& traj : corpus.trajectories) {
    stats.r_min = std::min(stats.r_min, traj.global_reward);
    stats.r_max = std::max(stats.r_max, traj.global_reward);
  }
  return stats;
}

RewardAssignment uniform_decompose(const Trajectory& traj) {
  auto agents = agent_turns(traj);
  if (agents.empty()) {
    throw Error(ErrorCode::NoAgentTurns,
                "trajectory \"" + traj.id + "\" has no AGENT turns");
  }
  RewardAssignment a;
  a.trajectory_id = traj.id;
  a.method = Method::Uniform;
  a.rewards = constant_shares(agents, traj.global_reward);
  a.residual = traj.global_reward - sum_in_order(a.rewards);
  return a;
}

RewardAssignment ircr_decompose(const Trajectory& traj, const CorpusStats& stats) {
  if (!(stats.r_max > stats.r_min)) {
    throw Error(ErrorCode::DegenerateCorpus,
                "reward range is degenerate (min == max == " +
                    format_score(stats.r_min) + ")");
  }
  auto agents = agent_turns(traj);
  if (agents.empty()) {
    throw Error(ErrorCode::NoAgentTurns,
                "trajectory \"" + traj.id + "\" has no AGENT turns");
  }
  const double value =
      (traj.global_reward - stats.r_min) / (stats.r_max - stats.r_min);
  RewardAssignment a;
  a.trajectory_id = traj.id;
  a.method = Method::Ircr;
  for (const auto& turn : agents) a.rewards[turn.index] = value;
  a.residual = traj.global_reward - sum_in_order(a.rewards);
  return a;
}

ReturnPredictor make_return_predictor(const Featurizer& f) {
  ReturnPredictor g;
  g.featurizer = f;
  g.weights.assign(f.hash_dim, 0.0);
  return g;
}

double predict_prefix(const ReturnPredictor& g, const Trajectory& traj,
                      int through_turn) {
  std::vector<double> x = prefix_feature_sum(g, traj, through_turn);
  double out = g.bias;
  for (int i = 0; i < g.featurizer.hash_dim; ++i) out += g.weights[i] * x[i];
  return out;
}

double predict_return(const ReturnPredictor& g, const Trajectory& traj) {
  return predict_prefix(g, traj, static_cast<int>(traj.turns.size()) - 1);
}

ReturnPredictor train_return_predictor(const Corpus& corpus,
                                       const ReturnPredictorHyper& hyper) {
  if (corpus.trajectories.empty()) {
    throw Error(ErrorCode::EmptySplit, "corpus has no trajectories");
  }
  ReturnPredictor g = make_return_predictor(
      Featurizer{.context_window = 0, .hash_dim = 1024, .n_gram_max = 1});
  g.hyper = hyper;

  const std::size_t n = corpus.trajectories.size();
  const int d = g.featurizer.hash_dim;
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  xs.reserve(n);
  ys.reserve(n);
  double max_norm_sq = 1.0;
  for (const auto& traj : corpus.trajectories) {
    xs.push_back(prefix_feature_sum(g, traj,
                                    static_cast<int>(traj.turns.size()) - 1));
    ys.push_back(traj.global_reward);
    double norm_sq = 1.0;  // the bias coordinate
    for (double v : xs.back()) norm_sq += v * v;
    max_norm_sq = std::max(max_norm_sq, norm_sq);
  }
  const double step = hyper.learning_rate / max_norm_sq;

  auto full_mse = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double err = g.bias - ys[i];
      for (int j = 0; j < d; ++j) err += g.weights[j] * xs[i][j];
      sum += err * err;
    }
    return sum / static_cast<double>(n);
  };

  g.loss_curve.push_back(full_mse());
  std::vector<double> grad_w(d);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double err = g.bias - ys[i];
      for (int j = 0; j < d; ++j) err += g.weights[j] * xs[i][j];
      double coef = 2.0 * err / static_cast<double>(n);
      for (int j = 0; j < d; ++j) grad_w[j] += coef * xs[i][j];
      grad_b += coef;
    }
    for (int j = 0; j < d; ++j) g.weights[j] -= step * grad_w[j];
    g.bias -= step * grad_b;
    g.loss_curve.push_back(full_mse());
  }
  return g;
}

RewardAssignment rudder_decompose(const Trajectory& traj,
                                  const ReturnPredictor& g) {
  RewardAssignment a;
  a.trajectory_id = traj.id;
  a.method = Method::Rudder;

  // Incremental prefix evaluation: the head is linear, so the prediction
  // is the running dot product plus the bias.
  double running = 0.0;
  double prev = 0.0;  // g(empty prefix) := 0
  for (const auto& turn : traj.turns) {
    for (const auto& [i, v] :
         hash_utterance(turn.text, turn.speaker, g.featurizer)) {
      running += g.weights[i] * v;
    }
    if (turn.speaker == Speaker::Agent) {
      double here = g.bias + running;
      a.rewards[turn.index] = here - prev;
      prev = here;
    }
  }
  a.residual = traj.global_reward - sum_in_order(a.rewards);
  return a;
}

std::string to_json(const ReturnPredictor& g) {
  ordered_json obj;
  obj["schema_version"] = 1;
  obj["featurizer"] = {{"context_window", g.featurizer.context_window},
                       {"hash_dim", g.featurizer.hash_dim},
                       {"n_gram_max", g.featurizer.n_gram_max},
                       {"hash_seed", g.featurizer.hash_seed}};
  obj["weights"] = g.weights;
  obj["bias"] = g.bias;
  return obj.dump() + "\n";
}

ReturnPredictor return_predictor_from_json(const std::string& text) {
  ordered_json obj = ordered_json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::ParseError, "predictor file is not a JSON object");
  }
  try {
    ReturnPredictor g;
    const auto& jf = obj.at("featurizer");
    g.featurizer.context_window = jf.at("context_window").get<int>();
    g.featurizer.hash_dim = jf.at("hash_dim").get<int>();
    g.featurizer.n_gram_max = jf.at("n_gram_max").get<int>();
    g.featurizer.hash_seed = jf.at("hash_seed").get<std::uint64_t>();
    g.weights = obj.at("weights").get<std::vector<double>>();
    g.bias = obj.at("bias").get<double>();
    return g;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError,
                std::string("bad predictor file: ") + e.what());
  }
}

namespace detail {

std::vector<int> sample_subset(int count, int k, std::mt19937_64& rng) {
  std::vector<int> pool(count);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, count - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

namespace {

struct RRDItem {
  double reward = 0.0;
  std::vector<SparseVec> features;  // one per agent turn, ascending index
};

std::vector<RRDItem> rrd_cache(const Corpus& corpus, const Featurizer& f) {
  if (corpus.trajectories.empty()) {
    throw Error(ErrorCode::EmptySplit, "corpus has no trajectories");
  }
  std::vector<RRDItem> items;
  items.reserve(corpus.trajectories.size());
  for (const auto& traj : corpus.trajectories) {
    RRDItem item;
    item.reward = traj.global_reward;
    for (const auto& turn : agent_turns(traj)) {
      item.features.push_back(featurize_sparse(traj, turn.index, f));
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

RewardModel train_rrd(const Corpus& corpus, const RewardModel& init,
                      const RRDConfig& cfg) {
  if (cfg.K < 1) {
    throw Error(ErrorCode::BadK, "K must be >= 1, got " + std::to_string(cfg.K));
  }
  std::vector<RRDItem> items = rrd_cache(corpus, init.featurizer);

  RewardModel m = init;
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x725264ull));
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  std::vector<double> grad(param_count(m));
  const int batch = std::max(1, cfg.batch_trajectories);

  for (int it = 0; it < cfg.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int b = 0; b < batch; ++b) {
      const RRDItem& item = items[pick(rng)];
      const int t_count = static_cast<int>(item.features.size());
      if (t_count == 0) continue;
      const int k = std::min(cfg.K, t_count);
      std::vector<int> subset = detail::sample_subset(t_count, k, rng);
      const double scale = static_cast<double>(t_count) / k;
      double pred = 0.0;
      for (int s : subset) pred += predict_features(m, item.features[s]);
      pred *= scale;
      const double coef = 2.0 * (pred - item.reward) * scale / batch;
      for (int s : subset) {
        accumulate_prediction_gradient(m, item.features[s], coef, grad);
      }
    }
    apply_gradient(m, grad, cfg.learning_rate);
  }
  return m;
}

double rrd_surrogate(const Corpus& corpus, const RewardModel& m, int K,
                     std::uint64_t seed) {
  if (K < 1) {
    throw Error(ErrorCode::BadK, "K must be >= 1, got " + std::to_string(K));
  }
  std::vector<RRDItem> items = rrd_cache(corpus, m.featurizer);
  std::mt19937_64 rng(splitmix64(seed ^ 0x725264ull));
  double sum = 0.0;
  for (const auto& item : items) {
    const int t_count = static_cast<int>(item.features.size());
    const int k = std::min(K, std::max(t_count, 1));
    double pred = 0.0;
    if (t_count > 0) {
      std::vector<int> subset = detail::sample_subset(t_count, k, rng);
      for (int s : subset) pred += predict_features(m, item.features[s]);
      pred *= static_cast<double>(t_count) / k;
    }
    const double err = item.reward - pred;
    sum += err * err;
  }
  return sum / static_cast<double>(items.size());
}

RewardAssignment ConstantBaseline::operator()(const Trajectory& traj) const {
  auto agents = agent_turns(traj);
  if (agents.empty()) {
    throw Error(ErrorCode::NoAgentTurns,
                "trajectory \"" + traj.id + "\" has no AGENT turns");
  }
  RewardAssignment a;
  a.trajectory_id = traj.id;
  a.method = kind;
  a.rewards = constant_shares(agents, constant);
  a.residual = traj.global_reward - sum_in_order(a.rewards);
  return a;
}

ConstantBaseline constant_baseline(const Corpus& corpus, Method kind) {
  if (kind != Method::Mean && kind != Method::Mode) {
    throw Error(ErrorCode::BadValue, "constant baseline kind must be MEAN or MODE");
  }
  if (corpus.trajectories.empty()) {
    throw Error(ErrorCode::EmptySplit, "corpus has no trajectories");
  }
  ConstantBaseline out;
  out.kind = kind;
  if (kind == Method::Mean) {
    double sum = 0.0;
    for (const auto& traj : corpus.trajectories) sum += traj.global_reward;
    out.constant = sum / static_cast<double>(corpus.trajectories.size());
  } else {
    std::map<long long, int> counts;
    for (const auto& traj : corpus.trajectories) {
      counts[std::llround(traj.global_reward)] += 1;
    }
    long long best = counts.begin()->first;
    int best_count = 0;
    for (const auto& [value, count] : counts) {
      if (count > best_count) {  // ascending keys: ties keep the smaller
        best = value;
        best_count = count;
      }
    }
    out.constant = static_cast<double>(best);
  }
  return out;
}

}  // namespace geli
