#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "consim/core.hpp"
#include "consim/protocol.hpp"

// Round-by-round execution log: everything the offline verifier needs to
// re-check safety without trusting the kernel. Serialized as line-delimited
// JSON, one record per round between a header and a result line. Broadcasts
// stay in aggregate form ("to": "*") so files and memory stay proportional
// to senders, not n^2.

namespace consim {

struct RoundRecord {
  int round = 0;
  std::vector<CoinRecord> coins;
  std::vector<SendGroup> sent;
  AdversaryDecision decision;           // as emitted by the adversary
  std::vector<GroupDelivery> delivery;  // effective, aligned with `sent`
  std::vector<Transition> transitions;
};

struct ExecutionTrace {
  SystemConfig config;
  ProtocolParams params;
  std::vector<std::int8_t> inputs;
  nlohmann::json adversary_meta;  // kind, strategy, budget, prone set, order, schedule
  std::vector<RoundRecord> rounds;
  RunOutcome outcome = RunOutcome::Aborted;

  void serialize(std::ostream& os) const {
    nlohmann::json h{{"type", "header"},
                     {"n", config.n},
                     {"f", config.f},
                     {"seed", config.seed},
                     {"horizon", config.effective_horizon()},
                     {"inputs", inputs},
                     {"protocol",
                      {{"variant", to_string(params.variant)},
                       {"k", params.k},
                       {"comm", params.comm == CommPrimitive::Broadcast ? "broadcast" : "gossip-cost"},
                       {"literal_coin", params.literal_gather_coin}}},
                     {"adversary", adversary_meta}};
    os << h.dump() << "\n";
    for (const auto& r : rounds) {
      nlohmann::json jr{{"type", "round"}, {"round", r.round}};
      auto& coins = jr["coins"] = nlohmann::json::array();
      for (const auto& c : r.coins) coins.push_back({c.pid, c.word, c.heads});
      auto& sent = jr["sent"] = nlohmann::json::array();
      for (const auto& g : r.sent) {
        nlohmann::json e{{"s", g.sender}, {"p", to_string(g.payload.kind)}};
        if (g.payload.kind == PayloadKind::CommitteeVote) {
          e["v"] = g.payload.value;
          e["d"] = g.payload.decided;
        } else if (g.payload.kind == PayloadKind::ConsensusValue) {
          e["v"] = g.payload.value;
          e["r"] = g.payload.rep;
        }
        if (g.to_all)
          e["to"] = "*";
        else
          e["to"] = g.recipients;
        sent.push_back(std::move(e));
      }
      auto& crashed = jr["crashed"] = nlohmann::json::array();
      for (const auto& c : r.decision.crashes)
        crashed.push_back({{"pid", c.pid}, {"deliver", c.deliver_to}});
      auto& del = jr["delivered"] = nlohmann::json::array();
      for (const auto& d : r.delivery) {
        if (d.full)
          del.push_back(true);
        else
          del.push_back(d.subset);
      }
      auto& tr = jr["transitions"] = nlohmann::json::array();
      for (const auto& t : r.transitions) tr.push_back({t.pid, t.value, t.decided});
      os << jr.dump() << "\n";
    }
    nlohmann::json res{{"type", "result"},
                       {"outcome", to_string(outcome)},
                       {"rounds", rounds.size()}};
    os << res.dump() << "\n";
  }

  std::string serialize() const {
    std::ostringstream os;
    serialize(os);
    return os.str();
  }

  static ExecutionTrace deserialize(std::istream& is) {
    ExecutionTrace t;
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false, saw_result = false;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw SimError("trace parse error at record " + std::to_string(lineno) + ": " + e.what());
      }
      try {
        const std::string type = j.at("type");
        if (type == "header") {
          saw_header = true;
          t.config.n = j.at("n");
          t.config.f = j.at("f");
          t.config.seed = j.at("seed");
          t.config.horizon = j.at("horizon");
          t.inputs = j.at("inputs").get<std::vector<std::int8_t>>();
          const auto& pj = j.at("protocol");
          std::string var = pj.at("variant");
          t.params.variant = var == "A"   ? Variant::A
                             : var == "C" ? Variant::C
                                          : Variant::CommitteeOnly;
          t.params.k = pj.at("k");
          t.params.comm = pj.at("comm") == "broadcast" ? CommPrimitive::Broadcast
                                                       : CommPrimitive::GossipCostModel;
          t.params.literal_gather_coin = pj.at("literal_coin");
          t.adversary_meta = j.at("adversary");
        } else if (type == "round") {
          RoundRecord r;
          r.round = j.at("round");
          for (const auto& c : j.at("coins"))
            r.coins.push_back({c.at(0).get<Pid>(), c.at(1).get<std::uint64_t>(), c.at(2).get<bool>()});
          for (const auto& e : j.at("sent")) {
            SendGroup g;
            g.sender = e.at("s");
            auto kind = payload_kind_from(e.at("p").get<std::string>());
            if (!kind) throw SimError("unknown payload kind");
            g.payload.kind = *kind;
            if (e.contains("v")) g.payload.value = e.at("v").get<std::int8_t>();
            if (e.contains("d")) g.payload.decided = e.at("d").get<bool>();
            if (e.contains("r")) g.payload.rep = e.at("r").get<std::uint8_t>();
            if (e.at("to").is_string()) {
              g.to_all = true;
            } else {
              g.to_all = false;
              g.recipients = e.at("to").get<std::vector<Pid>>();
            }
            r.sent.push_back(std::move(g));
          }
          for (const auto& c : j.at("crashed"))
            r.decision.crashes.push_back(
                {c.at("pid").get<Pid>(), c.at("deliver").get<std::vector<Pid>>()});
          for (const auto& d : j.at("delivered")) {
            GroupDelivery gd;
            if (d.is_boolean()) {
              gd.full = d.get<bool>();
              if (!gd.full) throw SimError("delivered=false without subset");
            } else {
              gd.full = false;
              gd.subset = d.get<std::vector<Pid>>();
            }
            r.delivery.push_back(std::move(gd));
          }
          if (r.delivery.size() != r.sent.size())
            throw SimError("delivered/sent length mismatch");
          for (const auto& e : j.at("transitions"))
            r.transitions.push_back(
                {e.at(0).get<Pid>(), e.at(1).get<std::int8_t>(), e.at(2).get<std::int8_t>()});
          t.rounds.push_back(std::move(r));
        } else if (type == "result") {
          saw_result = true;
          t.outcome = j.at("outcome") == "decided" ? RunOutcome::Decided : RunOutcome::Aborted;
          if (j.at("rounds").get<std::size_t>() != t.rounds.size())
            throw SimError("result round count mismatch");
        } else {
          throw SimError("unknown record type '" + type + "'");
        }
      } catch (const nlohmann::json::exception& e) {
        throw SimError("trace parse error at record " + std::to_string(lineno) + ": " + e.what());
      } catch (const SimError& e) {
        throw SimError("trace parse error at record " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (!saw_header) throw SimError("trace parse error: missing header record");
    if (!saw_result)
      throw SimError("trace parse error: truncated at record " + std::to_string(lineno) +
                     " (missing result)");
    return t;
  }
};

}  // namespace consim
