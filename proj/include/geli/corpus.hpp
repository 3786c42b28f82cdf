#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace geli {

enum class Speaker { Agent, User };
enum class Split { RewardTrain, Rl, Test };

// The 16 numeric behavioral channels; the 17th feature (the utterance
// itself) lives in Turn.text. Order here fixes descriptor rendering order.
enum class Channel {
  F0,
  Intensity,
  Jitter,
  LogEnergy,
  Gaze,
  NodYes,
  NodNo,
  Smile,
  Anger,
  Contempt,
  Disgust,
  Fear,
  Happiness,
  Neutral,
  Sadness,
  Surprise,
};

inline constexpr int kNumChannels = 16;

std::string_view to_string(Speaker s);
std::string_view to_string(Channel c);
Speaker speaker_from_string(std::string_view s);  // throws Error{BadValue}
Channel channel_from_string(std::string_view s);  // throws Error{UnknownChannel}

// Emotion channels are the 8 AffectNet classes and carry values in [0,1].
bool is_emotion(Channel c);
// Continuous acoustic channels binned by per-corpus tertiles.
bool is_acoustic(Channel c);

struct Turn {
  int index = 0;  // 0-based position within the trajectory
  Speaker speaker = Speaker::Agent;
  std::string text;
  double t_start = 0.0;  // seconds, >= 0
  double t_end = 0.0;    // seconds, >= t_start

  bool operator==(const Turn&) const = default;
};

struct Trajectory {
  std::string id;
  double global_reward = 0.0;  // session score in [0, 100]
  Speaker listener = Speaker::User;
  std::vector<Turn> turns;

  bool operator==(const Trajectory&) const = default;
};

struct FeatureFrame {
  Speaker speaker = Speaker::User;
  double timestamp_s = 0.0;
  Channel channel = Channel::Happiness;
  double value = 0.0;

  bool operator==(const FeatureFrame&) const = default;
};

struct Corpus {
  std::vector<Trajectory> trajectories;
  // Frames keyed by trajectory id, sorted by timestamp (stable).
  std::map<std::string, std::vector<FeatureFrame>> frames;
  Split split = Split::RewardTrain;

  const Trajectory* find(const std::string& id) const;
  const Trajectory& at(const std::string& id) const;  // Error{UnknownTrajectory}
  const std::vector<FeatureFrame>& frames_for(const std::string& id) const;

  bool operator==(const Corpus&) const;
};

// One JSON object per line: {id, global_reward, listener, turns:[{speaker,
// text, t_start, t_end}]}. Turn indices are assigned 0..T-1 in time order.
// Throws Error{ParseError} with the line number for malformed lines and
// Error{ValidationError} for out-of-range rewards, empty dialogues,
// non-monotone times, or trajectories without an AGENT turn.
std::vector<Trajectory> ingest_transcripts(const std::string& path);
std::vector<Trajectory> ingest_transcripts_text(std::string_view content);

// CSV with header exactly "trajectory_id,speaker,timestamp_s,channel,value".
// Attaches frames to an already-ingested corpus; rows referencing unknown
// trajectories or channels are rejected (Error{UnknownTrajectory} /
// Error{UnknownChannel}); emotion values outside [0,1] are
// Error{ValidationError}. Returns the same corpus for chaining.
Corpus& ingest_features(const std::string& path, Corpus& corpus);
Corpus& ingest_features_text(std::string_view content, Corpus& corpus);

// Exactly the AGENT-speaker turns, order preserved (Turn.index gives the
// position in the full dialogue). May be empty; callers error downstream.
std::vector<Turn> agent_turns(const Trajectory& traj);

// Serialization (inverse of the ingest functions; byte-deterministic).
std::string to_transcript_jsonl(const std::vector<Trajectory>& trajectories);
std::string to_feature_csv(const Corpus& corpus);

}  // namespace geli
