#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core vocabulary shared by the simulator kernel, the protocols and the
// adversaries: process ids, system configuration, message payloads and the
// send/crash records that make up one synchronous round.

namespace consim {

using Pid = std::int32_t;

class SimError : public std::runtime_error {
public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an adversary hands the kernel a decision that violates its
// budget, its kind restriction or its declared partial order.
class IllegalDecisionError : public SimError {
public:
  explicit IllegalDecisionError(const std::string& what) : SimError(what) {}
};

struct SystemConfig {
  Pid n = 1;                 // process count
  Pid f = 0;                 // crash budget, 0 <= f < n
  std::uint64_t seed = 1;
  int horizon = 0;           // max rounds before forced abort; 0 -> 50*n

  int effective_horizon() const { return horizon > 0 ? horizon : 50 * n; }

  void validate() const {
    if (n < 1) throw SimError("SystemConfig: n must be >= 1");
    if (f < 0 || f >= n) throw SimError("SystemConfig: need 0 <= f < n");
    if (horizon < 0) throw SimError("SystemConfig: horizon must be >= 0");
  }
};

enum class PayloadKind : std::uint8_t {
  LeaderAnnounce,  // "I elected myself this epoch"
  CountPing,       // liveness ping; population count in the counting round
  CommitteeVote,   // (value, decidedFlag) inside the committee
  ConsensusValue,  // (value, repetition in {1,2}) global propagation
};

struct Payload {
  PayloadKind kind = PayloadKind::CountPing;
  std::int8_t value = 0;     // CommitteeVote / ConsensusValue
  std::uint8_t rep = 0;      // ConsensusValue: 1 or 2
  bool decided = false;      // CommitteeVote flag

  friend bool operator==(const Payload&, const Payload&) = default;
};

// One sender's outgoing traffic for one round. Broadcasts are kept in
// aggregate form (to_all) so that a round costs O(senders), not O(n^2),
// in memory; self-delivery is implicit and never part of the recipient set.
struct SendGroup {
  Pid sender = -1;
  Payload payload;
  bool to_all = false;            // every pid != sender
  std::vector<Pid> recipients;    // used when !to_all (sorted, no sender)

  int addressed_count(Pid n) const {
    return to_all ? static_cast<int>(n - 1) : static_cast<int>(recipients.size());
  }
  bool addresses(Pid pid) const {
    if (pid == sender) return false;
    if (to_all) return true;
    for (Pid r : recipients)
      if (r == pid) return true;
    return false;
  }
};

// Per-crash directive: which of the crasher's queued messages still go out.
// `deliver_to` is interpreted against whatever is actually queued, so a
// pre-committed (non-adaptive) directive stays meaningful under any coins.
struct CrashDirective {
  Pid pid = -1;
  std::vector<Pid> deliver_to;  // recipients that still receive; empty = suppress all
};

// The adversary's answer for one round. The order of `crashes` doubles as
// the linearization witness for ordered adversaries: each entry's
// predecessors must be crashed earlier, or appear earlier in this list.
struct AdversaryDecision {
  std::vector<CrashDirective> crashes;

  bool empty() const { return crashes.empty(); }
};

enum class RunOutcome : std::uint8_t { Decided, Aborted };

inline const char* to_string(RunOutcome o) {
  return o == RunOutcome::Decided ? "decided" : "aborted";
}

inline const char* to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::LeaderAnnounce: return "LA";
    case PayloadKind::CountPing: return "CP";
    case PayloadKind::CommitteeVote: return "CV";
    case PayloadKind::ConsensusValue: return "PV";
  }
  return "?";
}

inline std::optional<PayloadKind> payload_kind_from(const std::string& s) {
  if (s == "LA") return PayloadKind::LeaderAnnounce;
  if (s == "CP") return PayloadKind::CountPing;
  if (s == "CV") return PayloadKind::CommitteeVote;
  if (s == "PV") return PayloadKind::ConsensusValue;
  return std::nullopt;
}

}  // namespace consim
