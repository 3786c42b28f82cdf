#include "geli/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"
#include "geli/util.hpp"

namespace geli {
namespace {

using nlohmann::ordered_json;

constexpr char kGramSep = '\x1f';  // never appears in tokenized words

void add_grams(const std::vector<std::string>& raw_tokens, char role_tag,
               const Featurizer& f, std::map<int, double>& acc) {
  std::vector<std::string> tokens;
  tokens.reserve(raw_tokens.size());
  for (const auto& t : raw_tokens) {
    tokens.push_back(std::string(1, role_tag) + "|" + t);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string gram;
    for (int n = 0; n < f.n_gram_max && i + n < tokens.size(); ++n) {
      if (n > 0) gram += kGramSep;
      gram += tokens[i + n];
      std::uint64_t h = fnv1a64(gram, f.hash_seed);
      int bucket = static_cast<int>(h % static_cast<std::uint64_t>(f.hash_dim));
      double sign = (splitmix64(h) >> 63) ? -1.0 : 1.0;
      acc[bucket] += sign;
    }
  }
}

void require_agent_turn(const Trajectory& traj, int turn_index) {
  if (turn_index < 0 || turn_index >= static_cast<int>(traj.turns.size()) ||
      traj.turns[turn_index].speaker != Speaker::Agent) {
    throw Error(ErrorCode::NotAgentTurn,
                "turn " + std::to_string(turn_index) + " of \"" + traj.id +
                    "\" is not an AGENT turn");
  }
}

// MLP parameter layout: W1 (hidden x D, row-major), b1, w2, b2.
// Affine layout: w (D), b.
struct MlpOffsets {
  std::size_t b1, w2, b2;
};

MlpOffsets mlp_offsets(const RewardModel& m) {
  std::size_t w1 = static_cast<std::size_t>(m.hidden) * m.featurizer.hash_dim;
  return {w1, w1 + m.hidden, w1 + 2 * static_cast<std::size_t>(m.hidden)};
}

std::vector<double> mlp_hidden(const RewardModel& m, const SparseVec& x) {
  std::vector<double> z(m.hidden);
  const std::size_t d = m.featurizer.hash_dim;
  for (int h = 0; h < m.hidden; ++h) {
    double pre = m.hidden_bias[h];
    const double* row = m.weights.data() + static_cast<std::size_t>(h) * d;
    for (const auto& [i, v] : x) pre += row[i] * v;
    z[h] = std::tanh(pre);
  }
  return z;
}

}  // namespace

void accumulate_prediction_gradient(const RewardModel& m, const SparseVec& x,
                                    double coef, std::vector<double>& grad) {
  if (m.kind == RegressorKind::Affine) {
    for (const auto& [i, v] : x) grad[i] += coef * v;
    grad[m.featurizer.hash_dim] += coef;
    return;
  }
  const auto off = mlp_offsets(m);
  const std::size_t d = m.featurizer.hash_dim;
  std::vector<double> z = mlp_hidden(m, x);
  for (int h = 0; h < m.hidden; ++h) {
    grad[off.w2 + h] += coef * z[h];
    double dpre = coef * m.output_weights[h] * (1.0 - z[h] * z[h]);
    grad[off.b1 + h] += dpre;
    double* row = grad.data() + static_cast<std::size_t>(h) * d;
    for (const auto& [i, v] : x) row[i] += dpre * v;
  }
  grad[off.b2] += coef;
}

void apply_gradient(RewardModel& m, const std::vector<double>& grad,
                    double step) {
  if (step == 0.0) return;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] != 0.0) set_param(m, i, get_param(m, i) - step * grad[i]);
  }
}

RewardModel make_affine_model(const Featurizer& f) {
  RewardModel m;
  m.featurizer = f;
  m.kind = RegressorKind::Affine;
  m.weights.assign(f.hash_dim, 0.0);
  return m;
}

RewardModel make_mlp_model(const Featurizer& f, int hidden, std::uint64_t seed) {
  RewardModel m;
  m.featurizer = f;
  m.kind = RegressorKind::Mlp;
  m.hidden = hidden;
  m.weights.assign(static_cast<std::size_t>(hidden) * f.hash_dim, 0.0);
  m.hidden_bias.assign(hidden, 0.0);
  m.output_weights.assign(hidden, 0.0);
  std::mt19937_64 rng(splitmix64(seed ^ 0x6d6c7021ull));
  std::normal_distribution<double> init(0.0, 0.1);
  for (auto& w : m.weights) w = init(rng);
  for (auto& w : m.output_weights) w = init(rng);
  return m;
}

SparseVec featurize_raw_counts(const Trajectory& traj, int turn_index,
                               const Featurizer& f) {
  require_agent_turn(traj, turn_index);
  std::map<int, double> acc;
  int first = std::max(0, turn_index - f.context_window);
  for (int t = first; t <= turn_index; ++t) {
    const Turn& turn = traj.turns[t];
    add_grams(tokenize(turn.text), turn.speaker == Speaker::Agent ? 'A' : 'U',
              f, acc);
  }
  SparseVec out;
  out.reserve(acc.size());
  for (const auto& [i, v] : acc) {
    if (v != 0.0) out.emplace_back(i, v);
  }
  return out;
}

SparseVec featurize_sparse(const Trajectory& traj, int turn_index,
                           const Featurizer& f) {
  SparseVec x = featurize_raw_counts(traj, turn_index, f);
  double norm_sq = 0.0;
  for (const auto& [i, v] : x) norm_sq += v * v;
  if (norm_sq > 0.0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [i, v] : x) v *= inv;
  }
  return x;
}

std::vector<double> featurize(const Trajectory& traj, int turn_index,
                              const Featurizer& f) {
  std::vector<double> dense(f.hash_dim, 0.0);
  for (const auto& [i, v] : featurize_sparse(traj, turn_index, f)) dense[i] = v;
  return dense;
}

SparseVec hash_utterance(std::string_view text, Speaker role,
                         const Featurizer& f) {
  std::map<int, double> acc;
  add_grams(tokenize(text), role == Speaker::Agent ? 'A' : 'U', f, acc);
  SparseVec out;
  double norm_sq = 0.0;
  for (const auto& [i, v] : acc) {
    if (v != 0.0) {
      out.emplace_back(i, v);
      norm_sq += v * v;
    }
  }
  if (norm_sq > 0.0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [i, v] : out) v *= inv;
  }
  return out;
}

double predict_features(const RewardModel& m, const SparseVec& x) {
  if (m.kind == RegressorKind::Affine) {
    double out = m.bias;
    for (const auto& [i, v] : x) out += m.weights[i] * v;
    return out;
  }
  std::vector<double> z = mlp_hidden(m, x);
  double out = m.output_bias;
  for (int h = 0; h < m.hidden; ++h) out += m.output_weights[h] * z[h];
  return out;
}

double predict(const RewardModel& m, const Trajectory& traj, int turn_index) {
  return predict_features(m, featurize_sparse(traj, turn_index, m.featurizer));
}

std::vector<TrainExample> build_examples(
    const Corpus& corpus, const std::vector<RewardAssignment>& assignments,
    const Featurizer& f) {
  std::vector<TrainExample> out;
  for (const auto& a : assignments) {
    const Trajectory& traj = corpus.at(a.trajectory_id);
    for (const auto& turn : agent_turns(traj)) {
      TrainExample ex;
      ex.features = featurize_sparse(traj, turn.index, f);
      auto it = a.rewards.find(turn.index);
      ex.target = it == a.rewards.end() ? 0.0 : it->second;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::size_t param_count(const RewardModel& m) {
  if (m.kind == RegressorKind::Affine) {
    return m.weights.size() + 1;
  }
  return m.weights.size() + 2 * static_cast<std::size_t>(m.hidden) + 1;
}

double get_param(const RewardModel& m, std::size_t i) {
  if (m.kind == RegressorKind::Affine) {
    return i < m.weights.size() ? m.weights[i] : m.bias;
  }
  const auto off = mlp_offsets(m);
  if (i < off.b1) return m.weights[i];
  if (i < off.w2) return m.hidden_bias[i - off.b1];
  if (i < off.b2) return m.output_weights[i - off.w2];
  return m.output_bias;
}

void set_param(RewardModel& m, std::size_t i, double v) {
  if (m.kind == RegressorKind::Affine) {
    if (i < m.weights.size()) m.weights[i] = v;
    else m.bias = v;
    return;
  }
  const auto off = mlp_offsets(m);
  if (i < off.b1) m.weights[i] = v;
  else if (i < off.w2) m.hidden_bias[i - off.b1] = v;
  else if (i < off.b2) m.output_weights[i - off.w2] = v;
  else m.output_bias = v;
}

double mse_loss(const RewardModel& m, const std::vector<TrainExample>& batch) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : batch) {
    double err = predict_features(m, ex.features) - ex.target;
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size());
}

RewardModel train_examples(const RewardModel& m,
                           const std::vector<TrainExample>& examples,
                           const TrainHyper& hyper) {
  if (examples.empty()) {
    throw Error(ErrorCode::EmptyTrainingSet, "no (turn, reward) pairs to fit");
  }
  RewardModel out = m;
  out.meta = TrainingMeta{hyper.learning_rate, hyper.epochs, hyper.seed, 0.0, {}};
  out.meta.loss_curve.push_back(mse_loss(out, examples));

  std::mt19937_64 rng(splitmix64(hyper.seed ^ 0x7261696eull));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size =
      hyper.batch_size <= 0 ? examples.size()
                            : static_cast<std::size_t>(hyper.batch_size);
  std::vector<double> grad(param_count(out));

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (batch_size < examples.size()) {
      std::shuffle(order.begin(), order.end(), rng);
    }
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::size_t end = std::min(start + batch_size, order.size());
      std::fill(grad.begin(), grad.end(), 0.0);
      double scale = 2.0 / static_cast<double>(end - start);
      for (std::size_t j = start; j < end; ++j) {
        const TrainExample& ex = examples[order[j]];
        double err = predict_features(out, ex.features) - ex.target;
        accumulate_prediction_gradient(out, ex.features, scale * err, grad);
      }
      apply_gradient(out, grad, hyper.learning_rate);
    }
    out.meta.loss_curve.push_back(mse_loss(out, examples));
  }
  out.meta.final_train_loss = out.meta.loss_curve.back();
  return out;
}

RewardModel train(const RewardModel& m, const Corpus& corpus,
                  const std::vector<RewardAssignment>& assignments,
                  const TrainHyper& hyper) {
  return train_examples(m, build_examples(corpus, assignments, m.featurizer),
                        hyper);
}

double gradient_check(const RewardModel& m,
                      const std::vector<TrainExample>& batch, double epsilon) {
  if (epsilon <= 0.0) {
    throw Error(ErrorCode::BadValue, "epsilon must be positive");
  }
  std::vector<double> analytic(param_count(m), 0.0);
  if (!batch.empty()) {
    double scale = 2.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
      double err = predict_features(m, ex.features) - ex.target;
      accumulate_prediction_gradient(m, ex.features, scale * err, analytic);
    }
  }

  // Random subset of coordinates, plus the output bias for coverage.
  std::mt19937_64 rng(0x67726164ull);
  std::vector<std::size_t> coords;
  std::uniform_int_distribution<std::size_t> pick(0, param_count(m) - 1);
  for (int i = 0; i < 24; ++i) coords.push_back(pick(rng));
  coords.push_back(param_count(m) - 1);

  RewardModel probe = m;
  double worst = 0.0;
  for (std::size_t i : coords) {
    double saved = get_param(probe, i);
    set_param(probe, i, saved + epsilon);
    double up = mse_loss(probe, batch);
    set_param(probe, i, saved - epsilon);
    double down = mse_loss(probe, batch);
    set_param(probe, i, saved);
    double fd = (up - down) / (2.0 * epsilon);
    double rel = std::abs(analytic[i] - fd) /
                 std::max({std::abs(analytic[i]), std::abs(fd), 1e-8});
    worst = std::max(worst, rel);
  }
  return worst;
}

std::string to_json(const RewardModel& m) {
  ordered_json obj;
  obj["schema_version"] = 1;
  obj["featurizer"] = {{"context_window", m.featurizer.context_window},
                       {"hash_dim", m.featurizer.hash_dim},
                       {"n_gram_max", m.featurizer.n_gram_max},
                       {"hash_seed", m.featurizer.hash_seed}};
  obj["kind"] = m.kind == RegressorKind::Affine ? "affine" : "mlp";
  obj["weights"] = m.weights;
  obj["bias"] = m.bias;
  if (m.kind == RegressorKind::Mlp) {
    obj["hidden"] = m.hidden;
    obj["hidden_bias"] = m.hidden_bias;
    obj["output_weights"] = m.output_weights;
    obj["output_bias"] = m.output_bias;
  }
  obj["training_meta"] = {{"learning_rate", m.meta.learning_rate},
                          {"epochs", m.meta.epochs},
                          {"seed", m.meta.seed},
                          {"final_train_loss", m.meta.final_train_loss}};
  return obj.dump() + "\n";
}

RewardModel reward_model_from_json(const std::string& text) {
  ordered_json obj = ordered_json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::ParseError, "model file is not a JSON object");
  }
  try {
    RewardModel m;
    const auto& jf = obj.at("featurizer");
    m.featurizer.context_window = jf.at("context_window").get<int>();
    m.featurizer.hash_dim = jf.at("hash_dim").get<int>();
    m.featurizer.n_gram_max = jf.at("n_gram_max").get<int>();
    m.featurizer.hash_seed = jf.at("hash_seed").get<std::uint64_t>();
    std::string kind = obj.at("kind").get<std::string>();
    m.kind = kind == "mlp" ? RegressorKind::Mlp : RegressorKind::Affine;
    m.weights = obj.at("weights").get<std::vector<double>>();
    m.bias = obj.at("bias").get<double>();
    if (m.kind == RegressorKind::Mlp) {
      m.hidden = obj.at("hidden").get<int>();
      m.hidden_bias = obj.at("hidden_bias").get<std::vector<double>>();
      m.output_weights = obj.at("output_weights").get<std::vector<double>>();
      m.output_bias = obj.at("output_bias").get<double>();
    }
    if (obj.contains("training_meta")) {
      const auto& jm = obj["training_meta"];
      m.meta.learning_rate = jm.value("learning_rate", 0.0);
      m.meta.epochs = jm.value("epochs", 0);
      m.meta.seed = jm.value("seed", std::uint64_t{0});
      m.meta.final_train_loss = jm.value("final_train_loss", 0.0);
    }
    return m;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad model file: ") + e.what());
  }
}

std::string loss_curve_csv(const RewardModel& m) {
  std::string out = "epoch,mse\n";
  for (std::size_t epoch = 0; epoch < m.meta.loss_curve.size(); ++epoch) {
    out += std::to_string(epoch);
    out += ',';
    out += format_score(m.meta.loss_curve[epoch]);
    out += '\n';
  }
  return out;
}

}  // namespace geli
