#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geli/corpus.hpp"
#include "geli/descriptors.hpp"

namespace geli {

enum class Variant { TextOnly, Multimodal };

enum class Method { Llm, MmLlm, Uniform, Ircr, Rudder, Rrd, Mean, Mode };

std::string_view to_string(Variant v);
std::string_view to_string(Method m);
Method method_from_string(std::string_view s);  // throws Error{BadValue}

struct PromptBundle {
  std::string system_text;
  std::string user_text;  // contains the session score exactly twice
  std::string trajectory_id;
  Variant variant = Variant::TextOnly;
};

struct Provenance {
  std::string model_id;  // oracle model, or "mock"
  std::uint64_t sample_seed = 0;
  bool projected = false;

  bool operator==(const Provenance&) const = default;
};

// Per-turn scalar rewards for one trajectory. Keys are agent-turn indices;
// a missing key means "no annotation", preserved so the NAN class stays
// observable for the agreement metric.
struct RewardAssignment {
  std::string trajectory_id;
  Method method = Method::Llm;
  std::map<int, double> rewards;
  double residual = 0.0;  // R_GE minus the sum of annotated rewards
  Provenance provenance;

  bool operator==(const RewardAssignment&) const = default;
};

struct OracleConfig {
  std::string endpoint_url;
  std::string model_id = "o3-mini";
  double temperature = 1.0;
  int max_retries = 2;
  double timeout_s = 60.0;
  int max_prompt_turns = 400;
  int backoff_base_ms = 1000;  // doubles per retry, jittered
  bool project = false;        // apply project_to_constraint after parsing
};

// Transport abstraction over the chat-completion call. `seed` is the
// per-sample seed: the mock derives its noise stream from it and HTTP
// forwards it in the request body. Single attempt; retries live in
// decompose(). Implementations must be safe to call concurrently.
class ChatOracle {
public:
  virtual ~ChatOracle() = default;
  virtual std::string complete(const PromptBundle& bundle,
                               std::uint64_t seed) const = 0;
  virtual std::string model_id() const = 0;
};

// Renders the decomposition prompt. The user text is the fixed template
// with the session score substituted in the score statement and the
// sum-constraint sentence, a format instruction demanding a bare JSON
// object keyed by agent-turn index, then the transcript block: one
// "Turn <index> (Speaker A|Speaker B): <text>" line per turn, with the
// turn's descriptor line directly after the utterance when the variant is
// MULTIMODAL. `described` must be empty or parallel to traj.turns.
// Throws Error{NoAgentTurns} and Error{TooLong}.
PromptBundle build_prompt(const Trajectory& traj,
                          const std::vector<DescribedTurn>& described,
                          Variant variant, int max_prompt_turns = 400);

// Extracts the first JSON object from the raw completion. Keys must be
// agent-turn indices (Error{BadKey}), values numeric (Error{BadValue});
// no JSON object at all is Error{Unparseable}. Missing agent turns stay
// unannotated; residual is computed over the annotated ones.
RewardAssignment parse_response(const std::string& raw, const Trajectory& traj);

// Adds residual/n to every annotated reward: the sum constraint becomes
// tight (|new residual| <= 1e-9 * max(1, |R|)) while the relative order
// of the annotated rewards is unchanged. Throws Error{EmptyAssignment}.
RewardAssignment project_to_constraint(const RewardAssignment& a, double R);

// build_prompt -> oracle (retrying transport failures with jittered
// exponential backoff up to config.max_retries) -> parse_response,
// optionally projected per config. Parse failures are never retried.
RewardAssignment decompose(const Trajectory& traj,
                           const std::vector<DescribedTurn>& described,
                           Variant variant, const ChatOracle& oracle,
                           const OracleConfig& config, std::uint64_t seed);

// Two-sample agreement: each agent turn of `traj` is classified per
// assignment as POS (>0), NEG_NEU (<=0), or NAN (unannotated); returns
// the fraction of agent turns whose classes agree. Throws
// Error{TrajectoryMismatch} when ids differ.
double consistency(const RewardAssignment& a, const RewardAssignment& b,
                   const Trajectory& traj);

// Assignment file: JSONL, one RewardAssignment per line.
std::string to_assignment_jsonl(const std::vector<RewardAssignment>& assignments);
std::vector<RewardAssignment> assignments_from_jsonl(std::string_view content);

}  // namespace geli
