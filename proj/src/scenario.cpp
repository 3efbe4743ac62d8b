#include "evichain/scenario.hpp"

#include <algorithm>
#include <fstream>

namespace evichain {

namespace {

const char* to_string(TimeCheck c) {
  switch (c) {
    case TimeCheck::upheld: return "upheld";
    case TimeCheck::refuted: return "refuted";
    case TimeCheck::unproven: return "unproven";
  }
  return "unknown";
}

const char* to_string(AlibiCheck c) {
  switch (c) {
    case AlibiCheck::consistent: return "consistent";
    case AlibiCheck::fabrication_detected: return "fabrication_detected";
    case AlibiCheck::unproven: return "unproven";
  }
  return "unknown";
}

TimeCheck time_check_from_string(const std::string& s) {
  for (const TimeCheck c : {TimeCheck::upheld, TimeCheck::refuted, TimeCheck::unproven}) {
    if (s == to_string(c)) {
      return c;
    }
  }
  throw ConfigError("unknown elapsed-time result: " + s);
}

AlibiCheck alibi_check_from_string(const std::string& s) {
  for (const AlibiCheck c :
       {AlibiCheck::consistent, AlibiCheck::fabrication_detected, AlibiCheck::unproven}) {
    if (s == to_string(c)) {
      return c;
    }
  }
  throw ConfigError("unknown alibi result: " + s);
}

FaultMode fault_mode_from_string(const std::string& s) {
  if (s == "correct") return FaultMode::correct;
  if (s == "silent") return FaultMode::silent;
  if (s == "lying") return FaultMode::lying;
  throw ConfigError("unknown fault mode: " + s);
}

Dishonesty::Mode dishonesty_mode_from_string(const std::string& s) {
  if (s == "none") return Dishonesty::Mode::none;
  if (s == "hide") return Dishonesty::Mode::hide;
  if (s == "tamper") return Dishonesty::Mode::tamper;
  if (s == "inject") return Dishonesty::Mode::inject;
  throw ConfigError("unknown dishonesty mode: " + s);
}

Dishonesty::TamperField tamper_field_from_string(const std::string& s) {
  if (s == "data") return Dishonesty::TamperField::data;
  if (s == "time") return Dishonesty::TamperField::time;
  if (s == "location") return Dishonesty::TamperField::location;
  throw ConfigError("unknown tamper field: " + s);
}

const std::set<std::string> kInvariantNames{"confidentiality", "atomicity", "monotone_clock"};

bool contains_bytes(const Bytes& hay, const Bytes& needle) {
  if (needle.empty() || needle.size() > hay.size()) {
    return false;
  }
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool chain_bound(const ChainMessage& m) {
  return m.from.starts_with("node:") || m.to.starts_with("node:");
}

// The wire form an observation timestamp takes anywhere inside a term.
Bytes timestamp_needle(Timestamp t) {
  return Encoder().u64(FieldTag::timestamp, t).take();
}

}  // namespace

void Transcript::add(Timestamp t, const std::string& kind, nlohmann::json fields) {
  nlohmann::json line;
  line["seq"] = seq_++;
  line["t"] = t;
  line["kind"] = kind;
  line["data"] = std::move(fields);
  lines_.push_back(line.dump());
}

std::string Transcript::text() const {
  std::string out;
  for (const std::string& line : lines_) {
    out += line;
    out += '\n';
  }
  return out;
}

Digest Transcript::digest() const { return hash(to_bytes(text())); }

bool InvariantReport::holds(const std::string& name) const {
  if (name == "confidentiality") return confidentiality;
  if (name == "atomicity") return atomicity;
  if (name == "monotone_clock") return monotone_clock;
  return false;
}

Scenario Scenario::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open scenario file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad scenario json in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Scenario Scenario::from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("scenario must be a json object");
  }
  Scenario s;
  s.name = j.at("name").get<std::string>();
  s.description = j.value("description", std::string{});
  s.seed = j.value("seed", std::uint64_t{1});
  s.nodes = j.at("nodes").get<std::size_t>();
  if (s.nodes == 0) {
    throw ConfigError("scenario needs at least one chain node");
  }
  s.drop_rate = j.value("drop_rate", 0.0);
  if (s.drop_rate < 0.0 || s.drop_rate > 0.95) {
    throw ConfigError("drop rate must be in [0, 0.95]");
  }

  if (j.contains("params")) {
    const auto& p = j.at("params");
    s.params.time.close = p.value("close", s.params.time.close);
    s.params.time.apart = p.value("apart", s.params.time.apart);
    s.params.read_range_m = p.value("read_range_m", s.params.read_range_m);
    s.params.block_interval = p.value("block_interval", s.params.block_interval);
    s.params.forget_after = p.value("forget_after", s.params.forget_after);
    s.params.work_cost_per_block = p.value("work_cost_per_block", s.params.work_cost_per_block);
  }
  s.params.validate();

  std::set<std::string> locs, svcs, vens, tags, rdrs, clis;
  const auto fresh = [](std::set<std::string>& pool, const std::string& name, const char* kind) {
    if (!pool.insert(name).second) {
      throw ConfigError(std::string("duplicate ") + kind + ": " + name);
    }
  };
  for (const auto& l : j.value("locations", nlohmann::json::array())) {
    LocationDecl d;
    d.label = l.at("label").get<std::string>();
    if (l.contains("coords")) {
      d.coords = std::array<double, 2>{l.at("coords").at(0).get<double>(),
                                       l.at("coords").at(1).get<double>()};
    }
    fresh(locs, d.label, "location");
    s.locations.push_back(std::move(d));
  }
  for (const auto& v : j.value("services", nlohmann::json::array())) {
    const std::string name = v.get<std::string>();
    fresh(svcs, name, "service");
    s.services.push_back(name);
  }
  for (const auto& v : j.value("vendors", nlohmann::json::array())) {
    VendorDecl d;
    d.name = v.at("name").get<std::string>();
    d.key_seed = v.at("key_seed").get<std::uint64_t>();
    d.pki_from = v.at("pki_from").get<Timestamp>();
    d.pki_until = v.at("pki_until").get<Timestamp>();
    if (d.pki_from >= d.pki_until) {
      throw ConfigError("vendor pki window must be non-empty: " + d.name);
    }
    fresh(vens, d.name, "vendor");
    s.vendors.push_back(std::move(d));
  }
  for (const auto& v : j.value("tags", nlohmann::json::array())) {
    TagDecl d{v.at("name").get<std::string>(), v.at("at").get<std::string>()};
    fresh(tags, d.name, "tag");
    if (!locs.count(d.at)) {
      throw ConfigError("tag " + d.name + " placed at unknown location " + d.at);
    }
    s.tags.push_back(std::move(d));
  }
  for (const auto& v : j.value("readers", nlohmann::json::array())) {
    ReaderDecl d;
    d.name = v.at("name").get<std::string>();
    d.key_seed = v.at("key_seed").get<std::uint64_t>();
    d.owner = v.at("owner").get<std::string>();
    d.at = v.at("at").get<std::string>();
    d.submit_node = v.value("submit_node", 0);
    fresh(rdrs, d.name, "reader");
    if (!svcs.count(d.owner)) {
      throw ConfigError("reader " + d.name + " owned by unknown service " + d.owner);
    }
    if (!locs.count(d.at)) {
      throw ConfigError("reader " + d.name + " placed at unknown location " + d.at);
    }
    if (d.submit_node < 0 || static_cast<std::size_t>(d.submit_node) >= s.nodes) {
      throw ConfigError("reader " + d.name + " submits to an unknown node");
    }
    s.readers.push_back(std::move(d));
  }
  for (const auto& v : j.value("clients", nlohmann::json::array())) {
    const std::string name = v.get<std::string>();
    fresh(clis, name, "client");
    s.clients.push_back(name);
  }

  // Walk the script once, checking every reference against the declarations
  // above so a broken scenario fails before anything runs.
  std::set<std::string> forge_labels;
  std::set<std::string> all_labels;
  std::set<std::string> verdict_labels, elapsed_labels, alibi_labels, audit_labels, anchor_labels;
  const auto need = [](const nlohmann::json& op, const char* key) -> const nlohmann::json& {
    if (!op.contains(key)) {
      throw ConfigError(std::string("op ") + op.value("op", "?") + " missing field: " + key);
    }
    return op.at(key);
  };
  const auto ref = [](const std::set<std::string>& pool, const std::string& name,
                      const char* kind) {
    if (!pool.count(name)) {
      throw ConfigError(std::string("unknown ") + kind + ": " + name);
    }
  };
  const auto node_ok = [&](const nlohmann::json& v, bool allow_producer) {
    const int k = v.get<int>();
    if (k < 0 || static_cast<std::size_t>(k) >= s.nodes) {
      throw ConfigError("node index out of range");
    }
    if (!allow_producer && k == 0) {
      throw ConfigError("the producing node stays honest");
    }
  };
  const auto take_label = [&](const nlohmann::json& op, std::set<std::string>& kindset) {
    const std::string l = need(op, "label").get<std::string>();
    if (!all_labels.insert(l).second) {
      throw ConfigError("duplicate label: " + l);
    }
    kindset.insert(l);
  };
  const auto record_source = [&](const nlohmann::json& op) {
    const bool has_obs = op.contains("observation");
    const bool has_forged = op.contains("forged");
    if (has_obs == has_forged) {
      throw ConfigError("op needs exactly one of observation or forged");
    }
    if (has_forged) {
      ref(forge_labels, op.at("forged").get<std::string>(), "forged record");
    }
  };

  if (!j.contains("script") || !j.at("script").is_array()) {
    throw ConfigError("scenario needs a script array");
  }
  for (const auto& op : j.at("script")) {
    const std::string name = op.at("op").get<std::string>();
    if (name == "advance") {
      if (op.contains("by") == op.contains("to")) {
        throw ConfigError("advance needs exactly one of by or to");
      }
    } else if (name == "issue_cert") {
      ref(vens, need(op, "vendor").get<std::string>(), "vendor");
      ref(rdrs, need(op, "reader").get<std::string>(), "reader");
      if (need(op, "from").get<Timestamp>() >= need(op, "until").get<Timestamp>()) {
        throw ConfigError("certificate window must be non-empty");
      }
      if (op.contains("submit_node")) {
        node_ok(op.at("submit_node"), true);
      }
    } else if (name == "provision") {
      ref(svcs, need(op, "service").get<std::string>(), "service");
      ref(tags, need(op, "tag").get<std::string>(), "tag");
    } else if (name == "observe") {
      ref(rdrs, need(op, "reader").get<std::string>(), "reader");
      ref(tags, need(op, "tag").get<std::string>(), "tag");
    } else if (name == "move") {
      ref(tags, need(op, "tag").get<std::string>(), "tag");
      ref(locs, need(op, "to").get<std::string>(), "location");
    } else if (name == "tamper_reader") {
      ref(rdrs, need(op, "reader").get<std::string>(), "reader");
    } else if (name == "set_dishonesty") {
      ref(svcs, need(op, "service").get<std::string>(), "service");
      const auto mode = dishonesty_mode_from_string(need(op, "mode").get<std::string>());
      if (op.contains("field")) {
        tamper_field_from_string(op.at("field").get<std::string>());
      }
      if (mode == Dishonesty::Mode::inject) {
        const auto& from = need(op, "inject_from");
        if (from.is_string()) {
          ref(forge_labels, from.get<std::string>(), "forged record");
        } else if (!from.is_number_unsigned()) {
          throw ConfigError("inject_from must be a forge label or observation index");
        }
      }
    } else if (name == "set_drop_rate") {
      const double r = need(op, "rate").get<double>();
      if (r < 0.0 || r > 0.95) {
        throw ConfigError("drop rate must be in [0, 0.95]");
      }
    } else if (name == "set_fault") {
      node_ok(need(op, "node"), false);
      fault_mode_from_string(need(op, "mode").get<std::string>());
      if (op.contains("fabricate_from")) {
        ref(forge_labels, op.at("fabricate_from").get<std::string>(), "forged record");
        need(op, "fabricate_bct");
        if (op.contains("fabricate_for")) {
          ref(tags, op.at("fabricate_for").get<std::string>(), "tag");
        }
      }
    } else if (name == "forge") {
      const std::string label = need(op, "label").get<std::string>();
      if (!forge_labels.insert(label).second) {
        throw ConfigError("duplicate forge label: " + label);
      }
      ref(rdrs, need(op, "reader").get<std::string>(), "reader");
      ref(tags, need(op, "tag").get<std::string>(), "tag");
      const std::string nonce = need(op, "nonce").get<std::string>();
      if (nonce != "provisioned" && nonce != "fresh") {
        throw ConfigError("forge nonce must be provisioned or fresh");
      }
      need(op, "time");
      need(op, "location");
      need(op, "data");
      if (op.contains("submit_node")) {
        node_ok(op.at("submit_node"), true);
      }
    } else if (name == "delete_term") {
      node_ok(need(op, "node"), false);
      need(op, "observation");
    } else if (name == "query_service") {
      take_label(op, verdict_labels);
      ref(clis, need(op, "client").get<std::string>(), "client");
      ref(svcs, need(op, "service").get<std::string>(), "service");
      ref(tags, need(op, "tag").get<std::string>(), "tag");
    } else if (name == "verify_readout") {
      take_label(op, verdict_labels);
      ref(clis, need(op, "client").get<std::string>(), "client");
      record_source(op);
      ref(tags, need(op, "tag").get<std::string>(), "tag");
    } else if (name == "audit_nodes") {
      take_label(op, audit_labels);
      ref(clis, need(op, "client").get<std::string>(), "client");
      ref(tags, need(op, "tag").get<std::string>(), "tag");
    } else if (name == "check_elapsed") {
      take_label(op, elapsed_labels);
      need(op, "claimed");
      record_source(op);
    } else if (name == "check_alibi") {
      take_label(op, alibi_labels);
      need(op, "claimed");
      record_source(op);
    } else if (name == "anchor_cycle") {
      take_label(op, anchor_labels);
      const auto& block_no = need(op, "block_no");
      if (block_no.get<std::uint64_t>() == 0) {
        throw ConfigError("anchor block number must be positive");
      }
      need(op, "observations");
    } else {
      throw ConfigError("unknown op: " + name);
    }
    s.script.push_back(op);
  }

  if (j.contains("expect")) {
    const auto& e = j.at("expect");
    const auto label_in = [](const std::set<std::string>& pool, const std::string& label,
                             const char* kind) {
      if (!pool.count(label)) {
        throw ConfigError(std::string("expectation for unknown ") + kind + " label: " + label);
      }
    };
    // .items() keeps a reference, so the defaults must outlive their loops.
    const nlohmann::json verdicts = e.value("verdicts", nlohmann::json::object());
    const nlohmann::json elapsed = e.value("elapsed", nlohmann::json::object());
    const nlohmann::json alibi = e.value("alibi", nlohmann::json::object());
    const nlohmann::json audits = e.value("audits", nlohmann::json::object());
    const nlohmann::json anchors = e.value("anchors", nlohmann::json::object());
    for (const auto& [label, spec] : verdicts.items()) {
      label_in(verdict_labels, label, "verdict");
      VerdictExpect ve;
      if (spec.contains("outcome")) {
        ve.outcome = outcome_from_string(spec.at("outcome").get<std::string>());
      }
      for (const auto& f : spec.value("findings_include", nlohmann::json::array())) {
        ve.include.push_back(finding_from_string(f.get<std::string>()));
      }
      for (const auto& f : spec.value("findings_exclude", nlohmann::json::array())) {
        ve.exclude.push_back(finding_from_string(f.get<std::string>()));
      }
      s.expect.verdicts.emplace(label, std::move(ve));
    }
    for (const auto& [label, spec] : elapsed.items()) {
      label_in(elapsed_labels, label, "elapsed");
      s.expect.elapsed.emplace(label, time_check_from_string(spec.get<std::string>()));
    }
    for (const auto& [label, spec] : alibi.items()) {
      label_in(alibi_labels, label, "alibi");
      s.expect.alibi.emplace(label, alibi_check_from_string(spec.get<std::string>()));
    }
    for (const auto& [label, spec] : audits.items()) {
      label_in(audit_labels, label, "audit");
      AuditExpect ae;
      const nlohmann::json node_map = spec.value("nodes", nlohmann::json::object());
      for (const auto& [node, outcome] : node_map.items()) {
        const int id = std::stoi(node);
        if (id < 0 || static_cast<std::size_t>(id) >= s.nodes) {
          throw ConfigError("audit expectation for unknown node " + node);
        }
        ae.per_node.emplace(id, outcome_from_string(outcome.get<std::string>()));
      }
      if (spec.contains("default")) {
        ae.fallback = outcome_from_string(spec.at("default").get<std::string>());
      }
      s.expect.audits.emplace(label, std::move(ae));
    }
    for (const auto& [label, spec] : anchors.items()) {
      label_in(anchor_labels, label, "anchor");
      AnchorExpect ae;
      ae.ok = spec.value("ok", true);
      ae.missing = spec.value("missing", std::size_t{0});
      s.expect.anchors.emplace(label, ae);
    }
    for (const auto& name : e.value("invariants", nlohmann::json::array())) {
      const std::string inv = name.get<std::string>();
      if (!kInvariantNames.count(inv)) {
        throw ConfigError("unknown invariant: " + inv);
      }
      s.expect.invariants.push_back(inv);
    }
  }
  return s;
}

Runner::Runner(Scenario scenario) : scenario_(std::move(scenario)) {}

void Runner::note(const std::string& kind, nlohmann::json fields) {
  const Timestamp t = world_ ? world_->now() : 0;
  if (t < last_logged_t_) {
    result_.invariants.monotone_clock = false;
    result_.invariants.violations.push_back("clock moved backwards");
  }
  last_logged_t_ = t;
  result_.transcript.add(t, kind, std::move(fields));
}

void Runner::log_message(const ChainMessage& m) {
  messages_.push_back(m);
  note("message", nlohmann::json{
                      {"from", m.from}, {"to", m.to}, {"kind", m.kind}, {"payload", to_hex(m.payload)}});
}

void Runner::build_world(std::uint64_t seed) {
  world_.emplace(scenario_.params, seed, scenario_.nodes);
  world_->chain().set_observer([this](const ChainMessage& m) { log_message(m); });
  for (const auto& l : scenario_.locations) {
    world_->add_location(Location{l.label, l.coords});
  }
  for (const auto& name : scenario_.services) {
    world_->add_service(name);
  }
  for (const auto& v : scenario_.vendors) {
    world_->add_vendor(v.name, v.key_seed, v.pki_from, v.pki_until);
  }
  for (const auto& t : scenario_.tags) {
    world_->create_tag(t.name, t.at);
  }
  for (const auto& r : scenario_.readers) {
    world_->add_reader(r.name, r.key_seed, r.owner, r.at, r.submit_node);
  }
  for (const auto& name : scenario_.clients) {
    world_->add_client(name);
  }
}

ChainView Runner::make_view(const std::string& client) {
  return ChainView(world_->chain().all_nodes(), &world_->pki(), world_->params(), client,
                   [this](const ChainMessage& m) { log_message(m); });
}

const Runner::ObservationRecord& Runner::observation(const nlohmann::json& op) const {
  const std::size_t i = op.at("observation").get<std::size_t>();
  if (i >= observations_.size()) {
    throw ConfigError("observation index out of range");
  }
  return observations_[i];
}

Digest Runner::known_search_key(const std::string& tag_name) const {
  const auto it = provisioned_.find(tag_name);
  if (it == provisioned_.end() || it->second.empty()) {
    throw ConfigError("tag was never provisioned: " + tag_name);
  }
  return readout_search_key(it->second.back(),
                            const_cast<World&>(*world_).tag(tag_name).id());
}

void Runner::tick() {
  const Timestamp now = world_->advance_clock(1);
  for (const auto& entry : world_->readers()) {
    Reader& r = world_->reader(entry.first);
    const std::size_t before = r.plaintext_records().size();
    r.forget_expired(now);
    if (r.plaintext_records().size() < before) {
      note("forget", nlohmann::json{{"reader", entry.first},
                                    {"dropped", before - r.plaintext_records().size()}});
    }
  }
  for (const auto& entry : world_->readers()) {
    const std::string& name = entry.first;
    Reader& r = world_->reader(name);
    r.flush_outbox([&](const Delivery& d) {
      Rng& rng = world_->rng();
      if (rng.unit() < drop_rate_) {
        return false;  // lost on the way; stays queued
      }
      if (d.is_evidence()) {
        const Evidence& ev = std::get<Evidence>(d.payload);
        log_message(ChainMessage{"reader:" + name, d.destination, "evidence", ev.encoded()});
        const int node = std::stoi(d.destination.substr(5));
        world_->chain().node(node).submit(Term{ev});
        delivered_evidence_.insert(evidence_digest(ev));
      } else {
        const Readout& ro = std::get<Readout>(d.payload);
        log_message(ChainMessage{"reader:" + name, d.destination, "readout", ro.encoded()});
        world_->service(d.destination).ingest(ro);
        delivered_readouts_.insert(readout_digest(ro));
      }
      // Delivered either way; a lost acknowledgement only causes a
      // redelivery, which the recipients deduplicate.
      return !(rng.unit() < drop_rate_);
    });
  }
  if (const auto block = world_->chain().on_tick(now)) {
    note("block", nlohmann::json{{"height", block->height}, {"terms", block->terms.size()}});
  }
  world_->chain().gossip_round();
}

void Runner::settle() {
  const auto outboxes_empty = [&] {
    for (const auto& entry : world_->readers()) {
      if (!entry.second.outbox().empty()) {
        return false;
      }
    }
    return true;
  };
  std::size_t guard = 0;
  while ((!outboxes_empty() || !world_->chain().quiesced()) && guard < 5000) {
    tick();
    ++guard;
  }
  note("settled", nlohmann::json{{"ticks", guard}, {"drained", outboxes_empty()}});
}

void Runner::execute(const nlohmann::json& op) {
  const std::string name = op.at("op").get<std::string>();
  note("op", op);

  if (name == "advance") {
    std::uint64_t ticks = 0;
    if (op.contains("by")) {
      ticks = op.at("by").get<std::uint64_t>();
    } else {
      const Timestamp to = op.at("to").get<Timestamp>();
      if (to < world_->now()) {
        throw ConfigError("advance target is in the past");
      }
      ticks = to - world_->now();
    }
    for (std::uint64_t i = 0; i < ticks; ++i) {
      tick();
    }
  } else if (name == "issue_cert") {
    Vendor& vendor = world_->vendor(op.at("vendor").get<std::string>());
    Reader& reader = world_->reader(op.at("reader").get<std::string>());
    const Certificate cert = vendor.make_certificate(
        reader.certified_public(), op.at("from").get<Timestamp>(), op.at("until").get<Timestamp>());
    const int node = op.value("submit_node", 0);
    log_message(ChainMessage{"vendor:" + vendor.name(), "node:" + std::to_string(node),
                             "certificate", cert.encoded()});
    world_->chain().node(node).submit(Term{cert});
  } else if (name == "provision") {
    Service& svc = world_->service(op.at("service").get<std::string>());
    const std::string tag_name = op.at("tag").get<std::string>();
    Tag& tag = world_->tag(tag_name);
    provisioned_[tag_name].push_back(svc.provision_nonce(tag.id(), world_->rng()));
  } else if (name == "observe") {
    Reader& reader = world_->reader(op.at("reader").get<std::string>());
    const std::string tag_name = op.at("tag").get<std::string>();
    Tag& tag = world_->tag(tag_name);
    Service& owner = world_->service(reader.owner());
    const auto nonce = owner.nonce_for(tag.id());
    if (!nonce) {
      throw ConfigError("tag was never provisioned: " + tag_name);
    }
    Reader::ObserveOptions opts;
    if (op.contains("write_data")) {
      opts.write_data = to_bytes(op.at("write_data").get<std::string>());
    }
    if (op.contains("reported_time")) {
      opts.reported_time = op.at("reported_time").get<Timestamp>();
    }
    const auto [ro, ev] =
        reader.observe(tag, world_->now(), *nonce, opts, world_->params().read_range_m);
    observations_.push_back(ObservationRecord{op.at("reader").get<std::string>(), tag_name,
                                              reader.owner(), *nonce, ro, ev});
    note("observed", nlohmann::json{{"index", observations_.size() - 1},
                                    {"reader", op.at("reader").get<std::string>()},
                                    {"tag", tag_name}});
  } else if (name == "move") {
    Tag& tag = world_->tag(op.at("tag").get<std::string>());
    tag.move(world_->now(), world_->location(op.at("to").get<std::string>()));
  } else if (name == "tamper_reader") {
    world_->reader(op.at("reader").get<std::string>()).tamper(world_->rng());
  } else if (name == "set_dishonesty") {
    Dishonesty d;
    d.mode = dishonesty_mode_from_string(op.at("mode").get<std::string>());
    if (op.contains("field")) {
      d.field = tamper_field_from_string(op.at("field").get<std::string>());
    }
    if (d.mode == Dishonesty::Mode::inject) {
      const auto& from = op.at("inject_from");
      d.injected = from.is_string() ? forged_.at(from.get<std::string>()).ro
                                    : observation(nlohmann::json{{"observation", from}}).ro;
      d.replace = op.value("replace", false);
    }
    world_->service(op.at("service").get<std::string>()).set_dishonesty(std::move(d));
  } else if (name == "set_drop_rate") {
    drop_rate_ = op.at("rate").get<double>();
  } else if (name == "set_fault") {
    ChainNode& node = world_->chain().node(op.at("node").get<std::size_t>());
    node.set_fault(fault_mode_from_string(op.at("mode").get<std::string>()));
    node.lies().withhold_evidence = op.value("withhold", false);
    node.lies().garbage_proofs = op.value("garbage_proofs", false);
    if (op.contains("fabricate_from")) {
      const ForgedRecord& f = forged_.at(op.at("fabricate_from").get<std::string>());
      // By default the lie is filed under the forged record's own key;
      // fabricate_for files it under another tag's key, so the node answers
      // a question with a record about something else entirely.
      const Digest key = op.contains("fabricate_for")
                             ? known_search_key(op.at("fabricate_for").get<std::string>())
                             : f.ev.search_key;
      node.lies().fabricated[key].push_back(
          EvidenceRecord{f.ev, op.at("fabricate_bct").get<Timestamp>()});
    }
  } else if (name == "forge") {
    Reader& reader = world_->reader(op.at("reader").get<std::string>());
    const std::string tag_name = op.at("tag").get<std::string>();
    Tag& tag = world_->tag(tag_name);
    RandomNumber nonce{};
    if (op.at("nonce").get<std::string>() == "provisioned") {
      const auto it = provisioned_.find(tag_name);
      if (it == provisioned_.end() || it->second.empty()) {
        throw ConfigError("tag was never provisioned: " + tag_name);
      }
      nonce = it->second.back();
    } else {
      world_->rng().fill(nonce);
    }
    const auto [ro, ev] = forge_observation(
        nonce, tag.id(), op.at("time").get<Timestamp>(), op.at("location").get<std::string>(),
        to_bytes(op.at("data").get<std::string>()), reader.active_private(),
        key_digest(reader.certified_public()));
    forged_[op.at("label").get<std::string>()] = ForgedRecord{ro, ev};
    if (op.contains("submit_node")) {
      const int node = op.at("submit_node").get<int>();
      log_message(
          ChainMessage{"adversary", "node:" + std::to_string(node), "evidence", ev.encoded()});
      world_->chain().node(node).submit(Term{ev});
    }
  } else if (name == "delete_term") {
    ChainNode& node = world_->chain().node(op.at("node").get<std::size_t>());
    const ObservationRecord& obs = observation(op);
    const std::size_t remined = node.rewrite_without_term(
        term_digest(Term{obs.ev}), world_->params().work_cost_per_block);
    note("rewrite", nlohmann::json{{"node", node.id()},
                                   {"remined", remined},
                                   {"work_spent", node.work_spent()}});
  } else if (name == "query_service") {
    const std::string label = op.at("label").get<std::string>();
    const std::string client = op.at("client").get<std::string>();
    Service& svc = world_->service(op.at("service").get<std::string>());
    const Digest sk = known_search_key(op.at("tag").get<std::string>());
    log_message(ChainMessage{client, svc.name(), "query",
                             Encoder().digest(FieldTag::digest, sk).take()});
    const std::vector<Readout> answer = svc.answer_query(sk);
    Encoder reply;
    for (const Readout& ro : answer) {
      reply.raw(FieldTag::data, ro.encoded());
    }
    log_message(ChainMessage{svc.name(), client, "readouts", reply.take()});
    ChainView view = make_view(client);
    const Verdict v = verify_service_answer(sk, answer, view);
    result_.verdicts[label] = v;
    result_.divergent_nodes.insert(view.divergent_nodes().begin(), view.divergent_nodes().end());
    nlohmann::json findings = nlohmann::json::array();
    for (const Finding f : v.findings) {
      findings.push_back(to_string(f));
    }
    note("verdict", nlohmann::json{{"label", label},
                                   {"outcome", to_string(v.outcome)},
                                   {"findings", findings},
                                   {"answered", answer.size()}});
  } else if (name == "verify_readout") {
    const std::string label = op.at("label").get<std::string>();
    const std::string client = op.at("client").get<std::string>();
    const Readout& ro =
        op.contains("forged") ? forged_.at(op.at("forged").get<std::string>()).ro
                              : observation(op).ro;
    Digest sk;
    if (op.contains("forged")) {
      sk = known_search_key(op.at("tag").get<std::string>());
    } else {
      const ObservationRecord& obs = observation(op);
      sk = readout_search_key(obs.nonce, world_->tag(obs.tag).id());
    }
    ChainView view = make_view(client);
    const Verdict v = verify_readout(ro, sk, view);
    result_.verdicts[label] = v;
    result_.divergent_nodes.insert(view.divergent_nodes().begin(), view.divergent_nodes().end());
    nlohmann::json findings = nlohmann::json::array();
    for (const Finding f : v.findings) {
      findings.push_back(to_string(f));
    }
    note("verdict", nlohmann::json{{"label", label},
                                   {"outcome", to_string(v.outcome)},
                                   {"findings", findings}});
  } else if (name == "audit_nodes") {
    const std::string label = op.at("label").get<std::string>();
    const std::string client = op.at("client").get<std::string>();
    const Digest sk = known_search_key(op.at("tag").get<std::string>());
    ChainView view = make_view(client);
    const auto quorum = view.evidence_quorum(sk);
    const auto verdicts = audit_evidence_service(sk, quorum.records, view);
    result_.audits[label] = verdicts;
    result_.divergent_nodes.insert(view.divergent_nodes().begin(), view.divergent_nodes().end());
    nlohmann::json per_node = nlohmann::json::object();
    for (const NodeVerdict& nv : verdicts) {
      per_node[std::to_string(nv.node_id)] = to_string(nv.verdict.outcome);
    }
    note("audit", nlohmann::json{{"label", label},
                                 {"reachable", quorum.reachable},
                                 {"agreed_records", quorum.records.size()},
                                 {"nodes", per_node}});
  } else if (name == "check_elapsed") {
    const std::string label = op.at("label").get<std::string>();
    const Evidence& ev = op.contains("forged")
                             ? forged_.at(op.at("forged").get<std::string>()).ev
                             : observation(op).ev;
    ChainView view = make_view(op.value("client", "client"));
    const TimeCheck res =
        check_elapsed_time(Term{ev}, op.at("claimed").get<Timestamp>(), world_->now(), view);
    result_.elapsed[label] = res;
    result_.divergent_nodes.insert(view.divergent_nodes().begin(), view.divergent_nodes().end());
    note("elapsed", nlohmann::json{{"label", label}, {"result", to_string(res)}});
  } else if (name == "check_alibi") {
    const std::string label = op.at("label").get<std::string>();
    const Readout& ro = op.contains("forged")
                            ? forged_.at(op.at("forged").get<std::string>()).ro
                            : observation(op).ro;
    ChainView view = make_view(op.value("client", "client"));
    const AlibiCheck res =
        check_alibi_readout(ro, op.at("claimed").get<Timestamp>(), world_->now(), view);
    result_.alibi[label] = res;
    result_.divergent_nodes.insert(view.divergent_nodes().begin(), view.divergent_nodes().end());
    note("alibi", nlohmann::json{{"label", label}, {"result", to_string(res)}});
  } else if (name == "anchor_cycle") {
    const std::string label = op.at("label").get<std::string>();
    if (!aggregator_) {
      aggregator_.emplace(generate_keypair(7777));
    }
    if (!contract_) {
      contract_.emplace();
    }
    for (const auto& idx : op.at("observations")) {
      aggregator_->add(observation(nlohmann::json{{"observation", idx}}).ev);
    }
    const BulkProof bp = aggregator_->issue_bulk_proof();
    std::vector<Digest> omit;
    for (const auto& idx : op.value("omit", nlohmann::json::array())) {
      omit.push_back(evidence_digest(observation(nlohmann::json{{"observation", idx}}).ev));
    }
    const auto batch = aggregator_->anchor(*contract_, op.at("block_no").get<std::uint64_t>(), omit);
    bool ok = false;
    std::size_t missing = 0;
    if (batch) {
      const auto rc = reconfirm_bulk(bp, *batch, *contract_);
      ok = rc.ok;
      missing = rc.missing.size();
    }
    result_.anchors[label] = {ok, missing};
    note("anchor", nlohmann::json{{"label", label},
                                  {"ok", ok},
                                  {"missing", missing},
                                  {"covered", bp.covered.size()},
                                  {"gas_used", contract_->gas_used()}});
  } else {
    throw ConfigError("unknown op: " + name);
  }
}

void Runner::scan_invariants() {
  InvariantReport& report = result_.invariants;

  // Secret material that must never travel: private keys of every actor.
  std::vector<Bytes> secrets;
  const auto add_secret = [&](const PrivateKey& k) {
    secrets.push_back(k.bytes);
    if (k.bytes.size() >= 32) {
      secrets.emplace_back(k.bytes.begin(), k.bytes.begin() + 32);
    }
  };
  for (const auto& r : scenario_.readers) {
    add_secret(generate_keypair(r.key_seed).priv);
    add_secret(world_->reader(r.name).active_private());
  }
  for (const auto& v : scenario_.vendors) {
    add_secret(generate_keypair(v.key_seed).priv);
  }
  if (aggregator_) {
    add_secret(generate_keypair(7777).priv);
  }

  // Plaintext that must never reach the chain: nonces, tag ids, location
  // labels, carried data, and the wire form of every observation timestamp.
  std::vector<std::pair<std::string, Bytes>> plain;
  for (const auto& [tag_name, nonces] : provisioned_) {
    for (const RandomNumber& n : nonces) {
      plain.emplace_back("nonce", Bytes(n.begin(), n.end()));
    }
  }
  for (const auto& t : scenario_.tags) {
    const TagId id = world_->tag(t.name).id();
    plain.emplace_back("tag id", Bytes(id.begin(), id.end()));
  }
  for (const auto& l : scenario_.locations) {
    if (l.label.size() >= 3) {
      plain.emplace_back("location label", to_bytes(l.label));
    }
  }
  for (const ObservationRecord& obs : observations_) {
    if (obs.ro.data.size() >= 3) {
      plain.emplace_back("carried data", obs.ro.data);
    }
    plain.emplace_back("observation timestamp", timestamp_needle(obs.ro.time));
  }

  std::vector<Bytes> reader_kds;
  for (const auto& r : scenario_.readers) {
    const Digest kd = world_->reader(r.name).id();
    reader_kds.emplace_back(kd.v.begin(), kd.v.end());
  }

  for (std::size_t i = 0; i < messages_.size(); ++i) {
    const ChainMessage& m = messages_[i];
    for (const Bytes& secret : secrets) {
      if (contains_bytes(m.payload, secret)) {
        report.confidentiality = false;
        report.violations.push_back("private key bytes in message from " + m.from + " to " + m.to);
      }
    }
    if (!chain_bound(m)) {
      continue;
    }
    for (const auto& [what, needle] : plain) {
      if (contains_bytes(m.payload, needle)) {
        report.confidentiality = false;
        report.violations.push_back(what + " leaked in message from " + m.from + " to " + m.to);
      }
    }
    for (const Bytes& kd : reader_kds) {
      if (contains_bytes(m.payload, kd)) {
        ++report.key_digest_exposures;
        break;
      }
    }
  }

  // Both halves of every observation, or neither; never just one.
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const ObservationRecord& obs = observations_[i];
    const bool readout_in = delivered_readouts_.count(readout_digest(obs.ro)) > 0;
    const bool evidence_in = delivered_evidence_.count(evidence_digest(obs.ev)) > 0;
    if (readout_in != evidence_in) {
      report.atomicity = false;
      report.violations.push_back("observation " + std::to_string(i) + " is half recorded");
    }
  }

  note("invariants", nlohmann::json{{"confidentiality", report.confidentiality},
                                    {"atomicity", report.atomicity},
                                    {"monotone_clock", report.monotone_clock},
                                    {"key_digest_exposures", report.key_digest_exposures},
                                    {"violations", report.violations}});
}

void Runner::check_expectations() {
  auto& failures = result_.failures;
  const auto fail = [&](const std::string& what) { failures.push_back(what); };

  for (const auto& [label, exp] : scenario_.expect.verdicts) {
    const auto it = result_.verdicts.find(label);
    if (it == result_.verdicts.end()) {
      fail("verdict " + label + " was never produced");
      continue;
    }
    if (exp.outcome && *exp.outcome != it->second.outcome) {
      fail("verdict " + label + ": expected " + to_string(*exp.outcome) + ", got " +
           to_string(it->second.outcome));
    }
    for (const Finding f : exp.include) {
      if (!it->second.has(f)) {
        fail("verdict " + label + ": missing finding " + to_string(f));
      }
    }
    for (const Finding f : exp.exclude) {
      if (it->second.has(f)) {
        fail("verdict " + label + ": forbidden finding " + to_string(f));
      }
    }
  }
  for (const auto& [label, exp] : scenario_.expect.elapsed) {
    const auto it = result_.elapsed.find(label);
    if (it == result_.elapsed.end()) {
      fail("elapsed check " + label + " was never run");
    } else if (it->second != exp) {
      fail("elapsed " + label + ": expected " + to_string(exp) + ", got " + to_string(it->second));
    }
  }
  for (const auto& [label, exp] : scenario_.expect.alibi) {
    const auto it = result_.alibi.find(label);
    if (it == result_.alibi.end()) {
      fail("alibi check " + label + " was never run");
    } else if (it->second != exp) {
      fail("alibi " + label + ": expected " + to_string(exp) + ", got " + to_string(it->second));
    }
  }
  for (const auto& [label, exp] : scenario_.expect.audits) {
    const auto it = result_.audits.find(label);
    if (it == result_.audits.end()) {
      fail("audit " + label + " was never run");
      continue;
    }
    for (const NodeVerdict& nv : it->second) {
      const auto want = exp.per_node.find(nv.node_id);
      std::optional<Outcome> expected;
      if (want != exp.per_node.end()) {
        expected = want->second;
      } else if (exp.fallback) {
        expected = exp.fallback;
      }
      if (expected && nv.verdict.outcome != *expected) {
        fail("audit " + label + " node " + std::to_string(nv.node_id) + ": expected " +
             to_string(*expected) + ", got " + to_string(nv.verdict.outcome));
      }
    }
  }
  for (const auto& [label, exp] : scenario_.expect.anchors) {
    const auto it = result_.anchors.find(label);
    if (it == result_.anchors.end()) {
      fail("anchor cycle " + label + " was never run");
      continue;
    }
    if (it->second.first != exp.ok) {
      fail("anchor " + label + ": reconfirmation " + (it->second.first ? "passed" : "failed") +
           " unexpectedly");
    }
    if (it->second.second != exp.missing) {
      fail("anchor " + label + ": expected " + std::to_string(exp.missing) + " missing, got " +
           std::to_string(it->second.second));
    }
  }
  for (const std::string& inv : scenario_.expect.invariants) {
    if (!result_.invariants.holds(inv)) {
      fail("invariant violated: " + inv);
    }
  }
}

ScenarioResult Runner::run(std::optional<std::uint64_t> seed_override) {
  const std::uint64_t seed = seed_override.value_or(scenario_.seed);

  result_ = ScenarioResult{};
  result_.name = scenario_.name;
  result_.seed = seed;
  drop_rate_ = scenario_.drop_rate;
  observations_.clear();
  forged_.clear();
  provisioned_.clear();
  messages_.clear();
  delivered_readouts_.clear();
  delivered_evidence_.clear();
  aggregator_.reset();
  contract_.reset();
  last_logged_t_ = 0;

  build_world(seed);
  note("scenario", nlohmann::json{{"name", scenario_.name},
                                  {"seed", seed},
                                  {"nodes", scenario_.nodes},
                                  {"drop_rate", scenario_.drop_rate}});

  for (const auto& op : scenario_.script) {
    execute(op);
  }
  settle();
  scan_invariants();
  check_expectations();

  for (const ChainNode* node : world_->chain().all_nodes()) {
    result_.chain_work += node->work_spent();
  }
  result_.anchor_gas = contract_ ? contract_->gas_used() : 0;
  result_.passed = result_.failures.empty();
  return result_;
}

}  // namespace evichain
