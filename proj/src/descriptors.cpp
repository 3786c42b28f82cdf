#include "geli/descriptors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"
#include "geli/util.hpp"

namespace geli {
namespace {

using nlohmann::ordered_json;

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string_view probability_bin(double v) {
  if (v < 0.33) return "low";
  if (v < 0.66) return "mid";
  return "high";
}

std::string_view bin_label(Channel c, double v, const BinEdges& edges) {
  switch (c) {
    case Channel::Gaze:
      return v >= 0.5 ? "on-screen" : "off-screen";
    case Channel::NodYes:
    case Channel::NodNo:
    case Channel::Smile:
      return v >= 0.5 ? "present" : "absent";
    default:
      break;
  }
  if (is_acoustic(c)) {
    auto it = edges.edges.find(c);
    if (it == edges.edges.end()) return "mid";  // no calibration available
    if (v < it->second[0]) return "low";
    if (v < it->second[1]) return "mid";
    return "high";
  }
  return probability_bin(v);  // emotion channels
}

}  // namespace

std::string_view to_string(Affect a) {
  switch (a) {
    case Affect::Positive: return "POSITIVE";
    case Affect::NonPositive: return "NON_POSITIVE";
    case Affect::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

TurnFeatureSummary summarize_turn(const Trajectory& traj, int turn_index,
                                  const std::vector<FeatureFrame>& frames) {
  if (turn_index < 0 || turn_index >= static_cast<int>(traj.turns.size()) ||
      traj.turns[turn_index].speaker != Speaker::Agent) {
    throw Error(ErrorCode::NotAgentTurn,
                "turn " + std::to_string(turn_index) + " of \"" + traj.id +
                    "\" is not an AGENT turn");
  }
  const Turn& turn = traj.turns[turn_index];

  TurnFeatureSummary summary;
  summary.turn_index = turn_index;

  std::map<Channel, std::pair<double, int>> acc;  // channel -> (sum, count)
  for (const auto& f : frames) {
    if (f.speaker != traj.listener) continue;
    if (f.timestamp_s < turn.t_start || f.timestamp_s >= turn.t_end) continue;
    ++summary.frame_count;
    auto& slot = acc[f.channel];
    slot.first += f.value;
    slot.second += 1;
  }
  for (const auto& [channel, slot] : acc) {
    summary.channel_means[channel] = slot.first / slot.second;
  }

  bool any_emotion = false;
  bool happiness_strict_max = false;
  auto hap = summary.channel_means.find(Channel::Happiness);
  if (hap != summary.channel_means.end()) {
    happiness_strict_max = true;
    any_emotion = true;
  }
  for (const auto& [channel, mean] : summary.channel_means) {
    if (!is_emotion(channel) || channel == Channel::Happiness) continue;
    any_emotion = true;
    if (hap == summary.channel_means.end() || mean >= hap->second) {
      happiness_strict_max = false;
    }
  }
  summary.affect_positive = !any_emotion ? Affect::Unknown
                            : happiness_strict_max ? Affect::Positive
                                                   : Affect::NonPositive;
  return summary;
}

std::string render_descriptor(const TurnFeatureSummary& summary,
                              const BinEdges& edges) {
  if (summary.frame_count == 0 || summary.channel_means.empty()) return "";
  std::string out = "[listener: ";
  bool first = true;
  for (int i = 0; i < kNumChannels; ++i) {
    auto channel = static_cast<Channel>(i);
    auto it = summary.channel_means.find(channel);
    if (it == summary.channel_means.end()) continue;
    if (!first) out += ", ";
    first = false;
    out += to_string(channel);
    out += '=';
    out += two_decimals(it->second);
    out += " (";
    out += bin_label(channel, it->second, edges);
    out += ')';
  }
  out += ']';
  return out;
}

std::vector<DescribedTurn> describe_trajectory(
    const Trajectory& traj, const std::vector<FeatureFrame>& frames,
    const BinEdges& edges) {
  std::vector<DescribedTurn> out;
  out.reserve(traj.turns.size());
  for (const auto& turn : traj.turns) {
    DescribedTurn dt;
    dt.turn = turn;
    if (turn.speaker == Speaker::Agent) {
      dt.descriptor_text =
          render_descriptor(summarize_turn(traj, turn.index, frames), edges);
    }
    out.push_back(std::move(dt));
  }
  return out;
}

BinEdges compute_bin_edges(const Corpus& corpus) {
  std::map<Channel, std::vector<double>> pooled;
  for (const auto& traj : corpus.trajectories) {
    for (const auto& f : corpus.frames_for(traj.id)) {
      if (f.speaker != traj.listener || !is_acoustic(f.channel)) continue;
      pooled[f.channel].push_back(f.value);
    }
  }
  BinEdges out;
  for (auto& [channel, values] : pooled) {
    std::sort(values.begin(), values.end());
    out.edges[channel] = {quantile_sorted(values, 1.0 / 3.0),
                          quantile_sorted(values, 2.0 / 3.0)};
  }
  return out;
}

std::string to_json(const BinEdges& edges) {
  ordered_json obj = ordered_json::object();
  for (int i = 0; i < kNumChannels; ++i) {
    auto channel = static_cast<Channel>(i);
    auto it = edges.edges.find(channel);
    if (it == edges.edges.end()) continue;
    obj[std::string(to_string(channel))] = {it->second[0], it->second[1]};
  }
  return obj.dump(2) + "\n";
}

BinEdges bin_edges_from_json(const std::string& text) {
  ordered_json obj = ordered_json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::ParseError, "bin-edge sidecar is not a JSON object");
  }
  BinEdges out;
  for (const auto& [key, value] : obj.items()) {
    Channel channel = channel_from_string(key);
    if (!value.is_array() || value.size() != 2) {
      throw Error(ErrorCode::ParseError, "bin edges for " + key +
                                             " must be a 2-element array");
    }
    out.edges[channel] = {value[0].get<double>(), value[1].get<double>()};
  }
  return out;
}

std::string to_described_jsonl(const std::vector<DescribedTrajectory>& described) {
  std::string out;
  for (const auto& d : described) {
    ordered_json obj;
    obj["id"] = d.trajectory.id;
    obj["global_reward"] = d.trajectory.global_reward;
    obj["listener"] = to_string(d.trajectory.listener);
    obj["turns"] = ordered_json::array();
    for (const auto& dt : d.turns) {
      ordered_json jt;
      jt["speaker"] = to_string(dt.turn.speaker);
      jt["text"] = dt.turn.text;
      jt["t_start"] = dt.turn.t_start;
      jt["t_end"] = dt.turn.t_end;
      if (!dt.descriptor_text.empty()) jt["descriptor"] = dt.descriptor_text;
      obj["turns"].push_back(std::move(jt));
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<DescribedTrajectory> described_from_jsonl(std::string_view content) {
  // Reuse transcript validation, then re-parse descriptor fields.
  std::vector<Trajectory> trajectories = ingest_transcripts_text(content);
  std::vector<DescribedTrajectory> out;
  out.reserve(trajectories.size());

  std::istringstream stream{std::string(content)};
  std::string line;
  std::size_t slot = 0;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    ordered_json obj = ordered_json::parse(line);
    DescribedTrajectory d;
    d.trajectory = trajectories[slot++];
    for (std::size_t i = 0; i < d.trajectory.turns.size(); ++i) {
      DescribedTurn dt;
      dt.turn = d.trajectory.turns[i];
      const auto& jt = obj["turns"][i];
      if (jt.contains("descriptor")) {
        dt.descriptor_text = jt["descriptor"].get<std::string>();
      }
      d.turns.push_back(std::move(dt));
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::map<std::string, std::vector<TurnFeatureSummary>> summarize_corpus(
    const Corpus& corpus) {
  std::map<std::string, std::vector<TurnFeatureSummary>> out;
  for (const auto& traj : corpus.trajectories) {
    auto& list = out[traj.id];
    const auto& frames = corpus.frames_for(traj.id);
    for (const auto& turn : agent_turns(traj)) {
      list.push_back(summarize_turn(traj, turn.index, frames));
    }
  }
  return out;
}

}  // namespace geli
