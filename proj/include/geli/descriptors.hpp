#pragma once

#include <map>
#include <string>
#include <vector>

#include "geli/corpus.hpp"

namespace geli {

enum class Affect { Positive, NonPositive, Unknown };

std::string_view to_string(Affect a);

// Aggregated listener cues over one agent turn's window [t_start, t_end).
struct TurnFeatureSummary {
  int turn_index = 0;
  std::map<Channel, double> channel_means;  // absent channel = no frames
  int frame_count = 0;                      // listener frames in the window
  Affect affect_positive = Affect::Unknown;
};

struct DescribedTurn {
  Turn turn;
  std::string descriptor_text;  // empty for turns without summaries

  bool operator==(const DescribedTurn&) const = default;
};

struct DescribedTrajectory {
  Trajectory trajectory;
  std::vector<DescribedTurn> turns;  // one per trajectory turn, same order
};

// Tertile edges for the continuous acoustic channels, calibrated on the
// listener frames of a reward-training corpus and persisted as a sidecar
// so described corpora are reproducible.
struct BinEdges {
  std::map<Channel, std::array<double, 2>> edges;
};

// Means of listener-speaker frames falling in the turn's half-open window.
// affect_positive is POSITIVE iff happiness is the strict argmax of the
// mean emotion scores present, NON_POSITIVE when emotions are present but
// happiness is not the strict argmax (ties included), UNKNOWN when no
// emotion frames fell in the window. Throws Error{NotAgentTurn}.
TurnFeatureSummary summarize_turn(const Trajectory& traj, int turn_index,
                                  const std::vector<FeatureFrame>& frames);

// "[listener: <channel>=<2-decimal value> (<bin>), ...]" with channels in
// enum order; "" when frame_count == 0. Emotion channels bin at
// {<0.33 low, <0.66 mid, else high}; gaze at 0.5 into on-screen/off-screen;
// nod/smile at 0.5 into present/absent; acoustic channels use the supplied
// tertile edges ("mid" when no edges were calibrated for the channel).
std::string render_descriptor(const TurnFeatureSummary& summary,
                              const BinEdges& edges = {});

// One DescribedTurn per turn; only AGENT turns with frames in-window get
// non-empty descriptors, USER turns pass through verbatim.
std::vector<DescribedTurn> describe_trajectory(
    const Trajectory& traj, const std::vector<FeatureFrame>& frames,
    const BinEdges& edges = {});

// R-7 tertiles (linear interpolation) of each acoustic channel's listener
// values pooled over the whole corpus; channels with no values are omitted.
BinEdges compute_bin_edges(const Corpus& corpus);

// Sidecar format: JSON object {channel: [edge1, edge2]}.
std::string to_json(const BinEdges& edges);
BinEdges bin_edges_from_json(const std::string& text);

// Described corpus = transcript JSONL plus a per-turn "descriptor" field
// (omitted when empty).
std::string to_described_jsonl(const std::vector<DescribedTrajectory>& described);
std::vector<DescribedTrajectory> described_from_jsonl(std::string_view content);

// Summaries for every agent turn of every trajectory, keyed by id.
std::map<std::string, std::vector<TurnFeatureSummary>> summarize_corpus(
    const Corpus& corpus);

}  // namespace geli
