#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evichain/anchor.hpp"
#include "evichain/verifier.hpp"
#include "evichain/world.hpp"

namespace evichain {

// Append-only, line-oriented record of one run. Every line is one compact
// json object carrying a sequence number and the tick it happened at, so two
// runs can be compared byte for byte.
class Transcript {
 public:
  void add(Timestamp t, const std::string& kind, nlohmann::json fields);

  const std::vector<std::string>& lines() const { return lines_; }
  std::string text() const;
  Digest digest() const;

 private:
  std::vector<std::string> lines_;
  std::size_t seq_ = 0;
};

struct VerdictExpect {
  std::optional<Outcome> outcome;
  std::vector<Finding> include;
  std::vector<Finding> exclude;
};

struct AuditExpect {
  std::map<int, Outcome> per_node;
  std::optional<Outcome> fallback;  // applies to nodes not listed
};

struct AnchorExpect {
  bool ok = true;
  std::size_t missing = 0;
};

struct Expectations {
  std::map<std::string, VerdictExpect> verdicts;
  std::map<std::string, TimeCheck> elapsed;
  std::map<std::string, AlibiCheck> alibi;
  std::map<std::string, AuditExpect> audits;
  std::map<std::string, AnchorExpect> anchors;
  std::vector<std::string> invariants;  // names that must hold for the run
};

// A declarative multi-party run: the cast, a scripted sequence of actions
// and checks, and what every labeled check must conclude. Loading validates
// every reference before anything executes.
class Scenario {
 public:
  struct LocationDecl {
    std::string label;
    std::optional<std::array<double, 2>> coords;
  };
  struct VendorDecl {
    std::string name;
    std::uint64_t key_seed = 0;
    Timestamp pki_from = 0;
    Timestamp pki_until = 0;
  };
  struct TagDecl {
    std::string name;
    std::string at;
  };
  struct ReaderDecl {
    std::string name;
    std::uint64_t key_seed = 0;
    std::string owner;
    std::string at;
    int submit_node = 0;
  };

  static Scenario from_json(const nlohmann::json& j);
  static Scenario load_file(const std::filesystem::path& path);

  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  std::size_t nodes = 3;
  double drop_rate = 0.0;
  SimParams params;

  std::vector<LocationDecl> locations;
  std::vector<std::string> services;
  std::vector<VendorDecl> vendors;
  std::vector<TagDecl> tags;
  std::vector<ReaderDecl> readers;
  std::vector<std::string> clients;

  std::vector<nlohmann::json> script;
  Expectations expect;
};

struct InvariantReport {
  bool confidentiality = true;  // no secret bytes in any chain-bound message
  bool atomicity = true;        // observations never end up half recorded
  bool monotone_clock = true;
  std::size_t key_digest_exposures = 0;  // expected: evidences carry them
  std::vector<std::string> violations;

  bool holds(const std::string& name) const;
};

struct ScenarioResult {
  std::string name;
  std::uint64_t seed = 0;
  bool passed = false;
  std::vector<std::string> failures;

  std::map<std::string, Verdict> verdicts;
  std::map<std::string, TimeCheck> elapsed;
  std::map<std::string, AlibiCheck> alibi;
  std::map<std::string, std::vector<NodeVerdict>> audits;
  std::map<std::string, std::pair<bool, std::size_t>> anchors;  // ok, missing count
  std::set<int> divergent_nodes;
  InvariantReport invariants;
  std::uint64_t chain_work = 0;
  std::uint64_t anchor_gas = 0;
  Transcript transcript;
};

// Executes a scenario tick by tick: readers forget and flush, deliveries
// brave the lossy network, replicas gossip, the producer mints blocks. At
// the end the run settles until nothing is in flight, the automatic
// invariants are scanned, and every labeled expectation is compared.
class Runner {
 public:
  explicit Runner(Scenario scenario);

  ScenarioResult run(std::optional<std::uint64_t> seed_override = std::nullopt);

 private:
  struct ObservationRecord {
    std::string reader;
    std::string tag;
    std::string owner;
    RandomNumber nonce{};
    Readout ro;
    Evidence ev;
  };
  struct ForgedRecord {
    Readout ro;
    Evidence ev;
  };

  void build_world(std::uint64_t seed);
  void tick();
  void settle();
  void note(const std::string& kind, nlohmann::json fields);
  void log_message(const ChainMessage& m);
  ChainView make_view(const std::string& client);
  void execute(const nlohmann::json& op);
  void scan_invariants();
  void check_expectations();

  const ObservationRecord& observation(const nlohmann::json& op) const;
  Digest known_search_key(const std::string& tag_name) const;

  Scenario scenario_;
  std::optional<World> world_;
  ScenarioResult result_;
  double drop_rate_ = 0.0;

  std::vector<ObservationRecord> observations_;
  std::map<std::string, ForgedRecord> forged_;
  std::map<std::string, std::vector<RandomNumber>> provisioned_;  // by tag name
  std::vector<ChainMessage> messages_;
  std::set<Digest> delivered_readouts_;
  std::set<Digest> delivered_evidence_;
  std::optional<EvidenceAggregator> aggregator_;
  std::optional<AnchorContract> contract_;
  Timestamp last_logged_t_ = 0;
};

}  // namespace evichain
