#include "geli/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geli/error.hpp"
#include "geli/util.hpp"

namespace geli {
namespace {

using nlohmann::ordered_json;

constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "f0",      "intensity", "jitter", "log_energy", "gaze",    "nod_yes",
    "nod_no",  "smile",     "anger",  "contempt",   "disgust", "fear",
    "happiness", "neutral", "sadness", "surprise",
};

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

[[noreturn]] void validation_fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::ValidationError,
              "line " + std::to_string(line_no) + ": " + what);
}

double require_number(const ordered_json& obj, const char* key, std::size_t line_no) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    parse_fail(line_no, std::string("missing or non-numeric \"") + key + "\"");
  }
  return obj[key].get<double>();
}

std::string require_string(const ordered_json& obj, const char* key,
                           std::size_t line_no) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    parse_fail(line_no, std::string("missing or non-string \"") + key + "\"");
  }
  return obj[key].get<std::string>();
}

}  // namespace

std::string_view to_string(Speaker s) {
  return s == Speaker::Agent ? "AGENT" : "USER";
}

std::string_view to_string(Channel c) {
  return kChannelNames[static_cast<int>(c)];
}

Speaker speaker_from_string(std::string_view s) {
  if (s == "AGENT") return Speaker::Agent;
  if (s == "USER") return Speaker::User;
  throw Error(ErrorCode::BadValue, "unknown speaker \"" + std::string(s) + "\"");
}

Channel channel_from_string(std::string_view s) {
  for (int i = 0; i < kNumChannels; ++i) {
    if (kChannelNames[i] == s) return static_cast<Channel>(i);
  }
  throw Error(ErrorCode::UnknownChannel,
              "channel \"" + std::string(s) + "\" is not one of the 16 channels");
}

bool is_emotion(Channel c) { return static_cast<int>(c) >= static_cast<int>(Channel::Anger); }

bool is_acoustic(Channel c) {
  return static_cast<int>(c) <= static_cast<int>(Channel::LogEnergy);
}

const Trajectory* Corpus::find(const std::string& id) const {
  for (const auto& t : trajectories) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const Trajectory& Corpus::at(const std::string& id) const {
  const Trajectory* t = find(id);
  if (!t) throw Error(ErrorCode::UnknownTrajectory, "no trajectory \"" + id + "\"");
  return *t;
}

const std::vector<FeatureFrame>& Corpus::frames_for(const std::string& id) const {
  static const std::vector<FeatureFrame> kEmpty;
  auto it = frames.find(id);
  return it == frames.end() ? kEmpty : it->second;
}

bool Corpus::operator==(const Corpus& other) const {
  return trajectories == other.trajectories && frames == other.frames &&
         split == other.split;
}

std::vector<Trajectory> ingest_transcripts_text(std::string_view content) {
  std::vector<Trajectory> out;
  std::istringstream stream{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      parse_fail(line_no, "not a JSON object");
    }

    Trajectory traj;
    traj.id = require_string(obj, "id", line_no);
    traj.global_reward = require_number(obj, "global_reward", line_no);
    if (!(traj.global_reward >= 0.0 && traj.global_reward <= 100.0)) {
      validation_fail(line_no, "global_reward " + format_score(traj.global_reward) +
                                   " out of [0,100]");
    }
    try {
      traj.listener = speaker_from_string(require_string(obj, "listener", line_no));
    } catch (const Error&) {
      validation_fail(line_no, "listener must be AGENT or USER");
    }
    if (!obj.contains("turns") || !obj["turns"].is_array()) {
      parse_fail(line_no, "missing \"turns\" array");
    }
    if (obj["turns"].empty()) {
      validation_fail(line_no, "empty dialogue");
    }

    double prev_start = -1.0;
    bool has_agent = false;
    for (const auto& jt : obj["turns"]) {
      if (!jt.is_object()) parse_fail(line_no, "turn is not an object");
      Turn turn;
      turn.index = static_cast<int>(traj.turns.size());
      try {
        turn.speaker = speaker_from_string(require_string(jt, "speaker", line_no));
      } catch (const Error&) {
        validation_fail(line_no, "turn speaker must be AGENT or USER");
      }
      turn.text = require_string(jt, "text", line_no);
      turn.t_start = require_number(jt, "t_start", line_no);
      turn.t_end = require_number(jt, "t_end", line_no);
      if (!(turn.t_start >= 0.0) || !std::isfinite(turn.t_end)) {
        validation_fail(line_no, "turn times must be finite and t_start >= 0");
      }
      if (turn.t_end < turn.t_start) {
        validation_fail(line_no, "t_end < t_start at turn " +
                                     std::to_string(turn.index));
      }
      if (turn.t_start < prev_start) {
        validation_fail(line_no, "non-monotone turn times at turn " +
                                     std::to_string(turn.index));
      }
      prev_start = turn.t_start;
      has_agent = has_agent || turn.speaker == Speaker::Agent;
      traj.turns.push_back(std::move(turn));
    }
    if (!has_agent) {
      validation_fail(line_no, "trajectory \"" + traj.id + "\" has no AGENT turn");
    }
    for (const auto& seen : out) {
      if (seen.id == traj.id) {
        validation_fail(line_no, "duplicate trajectory id \"" + traj.id + "\"");
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Trajectory> ingest_transcripts(const std::string& path) {
  return ingest_transcripts_text(read_file(path));
}

Corpus& ingest_features_text(std::string_view content, Corpus& corpus) {
  std::istringstream stream{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(stream, line)) {
    throw Error(ErrorCode::ParseError, "empty feature file");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "trajectory_id,speaker,timestamp_s,channel,value") {
    parse_fail(line_no, "bad header, expected "
               "trajectory_id,speaker,timestamp_s,channel,value");
  }

  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::array<std::string, 5> col;
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= col.size()) parse_fail(line_no, "too many columns");
        col[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != col.size()) parse_fail(line_no, "expected 5 columns");

    if (!corpus.find(col[0])) {
      throw Error(ErrorCode::UnknownTrajectory,
                  "line " + std::to_string(line_no) + ": no trajectory \"" +
                      col[0] + "\"");
    }
    FeatureFrame frame;
    try {
      frame.speaker = speaker_from_string(col[1]);
    } catch (const Error&) {
      validation_fail(line_no, "speaker must be AGENT or USER");
    }
    frame.channel = channel_from_string(col[3]);  // throws UnknownChannel
    try {
      std::size_t pos = 0;
      frame.timestamp_s = std::stod(col[2], &pos);
      if (pos != col[2].size()) throw std::invalid_argument("trailing");
      pos = 0;
      frame.value = std::stod(col[4], &pos);
      if (pos != col[4].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      parse_fail(line_no, "non-numeric timestamp_s or value");
    }
    if (!std::isfinite(frame.timestamp_s) || !std::isfinite(frame.value)) {
      validation_fail(line_no, "non-finite timestamp_s or value");
    }
    if (is_emotion(frame.channel) && (frame.value < 0.0 || frame.value > 1.0)) {
      validation_fail(line_no, std::string("emotion channel ") +
                                   std::string(to_string(frame.channel)) +
                                   " value out of [0,1]");
    }
    corpus.frames[col[0]].push_back(frame);
  }
  for (auto& [id, vec] : corpus.frames) {
    std::stable_sort(vec.begin(), vec.end(),
                     [](const FeatureFrame& a, const FeatureFrame& b) {
                       return a.timestamp_s < b.timestamp_s;
                     });
  }
  return corpus;
}

Corpus& ingest_features(const std::string& path, Corpus& corpus) {
  return ingest_features_text(read_file(path), corpus);
}

std::vector<Turn> agent_turns(const Trajectory& traj) {
  std::vector<Turn> out;
  for (const auto& t : traj.turns) {
    if (t.speaker == Speaker::Agent) out.push_back(t);
  }
  return out;
}

std::string to_transcript_jsonl(const std::vector<Trajectory>& trajectories) {
  std::string out;
  for (const auto& traj : trajectories) {
    ordered_json obj;
    obj["id"] = traj.id;
    obj["global_reward"] = traj.global_reward;
    obj["listener"] = to_string(traj.listener);
    obj["turns"] = ordered_json::array();
    for (const auto& turn : traj.turns) {
      ordered_json jt;
      jt["speaker"] = to_string(turn.speaker);
      jt["text"] = turn.text;
      jt["t_start"] = turn.t_start;
      jt["t_end"] = turn.t_end;
      obj["turns"].push_back(std::move(jt));
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string to_feature_csv(const Corpus& corpus) {
  std::string out = "trajectory_id,speaker,timestamp_s,channel,value\n";
  for (const auto& traj : corpus.trajectories) {
    for (const auto& f : corpus.frames_for(traj.id)) {
      out += traj.id;
      out += ',';
      out += to_string(f.speaker);
      out += ',';
      out += format_score(f.timestamp_s);
      out += ',';
      out += to_string(f.channel);
      out += ',';
      out += format_score(f.value);
      out += '\n';
    }
  }
  return out;
}

}  // namespace geli
