#include "geli/llm.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"
#include "geli/util.hpp"

namespace geli {
namespace {

using nlohmann::ordered_json;

constexpr std::string_view kSystemText =
    "You are given a final scalar score for Speaker A, indicating how much "
    "Speaker B experienced positive feelings (e.g., good, pleasant, happy) or "
    "negative feelings (e.g., bad, unpleasant, unhappy) during the "
    "conversation.";

constexpr std::string_view kBodyText =
    "Below, you are given the full conversation with aligned multimodal "
    "conversational features. Consider the utterances and the features, "
    "focusing on the utterances of Speaker A and the reactions of Speaker B. "
    "Redistribute the score across each of Speaker A’s utterances.\n\n"
    "Whenever you identify a salient, important utterance that contributed "
    "positively or negatively to the final reward score, assign a numerical "
    "value (which may be positive, negative, or zero) representing its "
    "contribution.";

constexpr std::string_view kFormatText =
    "Respond with only a JSON object mapping each of Speaker A's turn indices "
    "to a number, for example {\"0\": 1.5, \"4\": -0.5}. Do not include any "
    "other text.";

// First balanced {...} region of `raw` that parses as a JSON object.
ordered_json first_json_object(const std::string& raw) {
  for (std::size_t start = raw.find('{'); start != std::string::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        ordered_json obj =
            ordered_json::parse(raw.substr(start, i - start + 1), nullptr, false);
        if (!obj.is_discarded() && obj.is_object()) return obj;
        break;
      }
    }
  }
  throw Error(ErrorCode::Unparseable, "no JSON object in oracle response");
}

}  // namespace

std::string_view to_string(Variant v) {
  return v == Variant::TextOnly ? "TEXT_ONLY" : "MULTIMODAL";
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Llm: return "LLM";
    case Method::MmLlm: return "MM_LLM";
    case Method::Uniform: return "UNIFORM";
    case Method::Ircr: return "IRCR";
    case Method::Rudder: return "RUDDER";
    case Method::Rrd: return "RRD";
    case Method::Mean: return "MEAN";
    case Method::Mode: return "MODE";
  }
  return "LLM";
}

Method method_from_string(std::string_view s) {
  for (Method m : {Method::Llm, Method::MmLlm, Method::Uniform, Method::Ircr,
                   Method::Rudder, Method::Rrd, Method::Mean, Method::Mode}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::BadValue, "unknown method \"" + std::string(s) + "\"");
}

PromptBundle build_prompt(const Trajectory& traj,
                          const std::vector<DescribedTurn>& described,
                          Variant variant, int max_prompt_turns) {
  if (agent_turns(traj).empty()) {
    throw Error(ErrorCode::NoAgentTurns, "trajectory \"" + traj.id +
                                             "\" has no AGENT turns to score");
  }
  if (static_cast<int>(traj.turns.size()) > max_prompt_turns) {
    throw Error(ErrorCode::TooLong,
                "trajectory \"" + traj.id + "\" has " +
                    std::to_string(traj.turns.size()) + " turns, cap is " +
                    std::to_string(max_prompt_turns));
  }
  if (!described.empty() && described.size() != traj.turns.size()) {
    throw Error(ErrorCode::ValidationError,
                "described turns do not parallel the trajectory");
  }

  const std::string score = format_score(traj.global_reward);
  std::string user;
  user += "Final score: " + score + "\n";
  user += kBodyText;
  user += "\n\nAll of the assigned scores must sum up to:" + score + ".\n\n";
  user += kFormatText;
  user += "\n";
  for (const auto& turn : traj.turns) {
    user += "\nTurn " + std::to_string(turn.index) + " (Speaker ";
    user += turn.speaker == Speaker::Agent ? 'A' : 'B';
    user += "): " + turn.text;
    if (variant == Variant::Multimodal && !described.empty() &&
        !described[turn.index].descriptor_text.empty()) {
      user += "\n" + described[turn.index].descriptor_text;
    }
  }
  user += "\n";

  PromptBundle bundle;
  bundle.system_text = std::string(kSystemText);
  bundle.user_text = std::move(user);
  bundle.trajectory_id = traj.id;
  bundle.variant = variant;
  return bundle;
}

RewardAssignment parse_response(const std::string& raw, const Trajectory& traj) {
  ordered_json obj = first_json_object(raw);

  std::set<int> agents;
  for (const auto& t : agent_turns(traj)) agents.insert(t.index);

  RewardAssignment a;
  a.trajectory_id = traj.id;
  a.method = Method::Llm;
  for (const auto& [key, value] : obj.items()) {
    int index = -1;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
    if (ec != std::errc() || ptr != key.data() + key.size()) {
      throw Error(ErrorCode::BadKey, "key \"" + key + "\" is not a turn index");
    }
    if (!agents.count(index)) {
      throw Error(ErrorCode::BadKey, "key " + key + " is not an agent-turn index");
    }
    if (!value.is_number()) {
      throw Error(ErrorCode::BadValue, "value for turn " + key + " is not numeric");
    }
    a.rewards[index] = value.get<double>();
  }

  double sum = 0.0;
  for (const auto& [index, reward] : a.rewards) sum += reward;
  a.residual = traj.global_reward - sum;
  return a;
}

RewardAssignment project_to_constraint(const RewardAssignment& a, double R) {
  if (a.rewards.empty()) {
    throw Error(ErrorCode::EmptyAssignment,
                "cannot project an assignment with no annotated turns");
  }
  double sum = 0.0;
  for (const auto& [index, reward] : a.rewards) sum += reward;
  const double delta = (R - sum) / static_cast<double>(a.rewards.size());

  RewardAssignment out = a;
  double new_sum = 0.0;
  for (auto& [index, reward] : out.rewards) {
    reward += delta;
    new_sum += reward;
  }
  out.residual = R - new_sum;
  out.provenance.projected = true;
  return out;
}

RewardAssignment decompose(const Trajectory& traj,
                           const std::vector<DescribedTurn>& described,
                           Variant variant, const ChatOracle& oracle,
                           const OracleConfig& config, std::uint64_t seed) {
  PromptBundle bundle =
      build_prompt(traj, described, variant, config.max_prompt_turns);

  std::mt19937_64 jitter_rng(splitmix64(seed ^ fnv1a64(traj.id)));
  std::uniform_real_distribution<double> jitter(0.5, 1.5);

  std::string raw;
  for (int attempt = 0;; ++attempt) {
    try {
      raw = oracle.complete(bundle, seed);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OracleUnavailable ||
          attempt >= config.max_retries) {
        if (e.code() == ErrorCode::OracleUnavailable) {
          throw Error(ErrorCode::OracleUnavailable,
                      "gave up after " + std::to_string(attempt + 1) +
                          " attempts: " + e.message());
        }
        throw;
      }
      auto delay = static_cast<std::int64_t>(
          static_cast<double>(config.backoff_base_ms << attempt) *
          jitter(jitter_rng));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
  }

  RewardAssignment a = parse_response(raw, traj);
  a.method = variant == Variant::Multimodal ? Method::MmLlm : Method::Llm;
  a.provenance.model_id = oracle.model_id();
  a.provenance.sample_seed = seed;
  if (config.project) {
    a = project_to_constraint(a, traj.global_reward);
  }
  return a;
}

double consistency(const RewardAssignment& a, const RewardAssignment& b,
                   const Trajectory& traj) {
  if (a.trajectory_id != b.trajectory_id || a.trajectory_id != traj.id) {
    throw Error(ErrorCode::TrajectoryMismatch,
                "assignments for \"" + a.trajectory_id + "\" vs \"" +
                    b.trajectory_id + "\" on trajectory \"" + traj.id + "\"");
  }
  auto turns = agent_turns(traj);
  if (turns.empty()) {
    throw Error(ErrorCode::NoAgentTurns,
                "trajectory \"" + traj.id + "\" has no AGENT turns");
  }
  // Classes: 0 = POS (>0), 1 = NEG_NEU (<=0), 2 = NAN (unannotated).
  auto classify = [](const RewardAssignment& x, int index) {
    auto it = x.rewards.find(index);
    if (it == x.rewards.end()) return 2;
    return it->second > 0.0 ? 0 : 1;
  };
  int agree = 0;
  for (const auto& turn : turns) {
    if (classify(a, turn.index) == classify(b, turn.index)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(turns.size());
}

std::string to_assignment_jsonl(const std::vector<RewardAssignment>& assignments) {
  std::string out;
  for (const auto& a : assignments) {
    ordered_json obj;
    obj["trajectory_id"] = a.trajectory_id;
    obj["method"] = to_string(a.method);
    obj["rewards"] = ordered_json::object();
    for (const auto& [index, reward] : a.rewards) {
      obj["rewards"][std::to_string(index)] = reward;
    }
    obj["residual"] = a.residual;
    obj["provenance"] = {{"model_id", a.provenance.model_id},
                         {"sample_seed", a.provenance.sample_seed},
                         {"projected", a.provenance.projected}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<RewardAssignment> assignments_from_jsonl(std::string_view content) {
  std::vector<RewardAssignment> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string line(content.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": not a JSON object");
    }
    try {
      RewardAssignment a;
      a.trajectory_id = obj.at("trajectory_id").get<std::string>();
      a.method = method_from_string(obj.at("method").get<std::string>());
      for (const auto& [key, value] : obj.at("rewards").items()) {
        a.rewards[std::stoi(key)] = value.get<double>();
      }
      a.residual = obj.at("residual").get<double>();
      if (obj.contains("provenance")) {
        const auto& p = obj["provenance"];
        a.provenance.model_id = p.value("model_id", std::string());
        a.provenance.sample_seed = p.value("sample_seed", std::uint64_t{0});
        a.provenance.projected = p.value("projected", false);
      }
      out.push_back(std::move(a));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace geli
