#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evichain/reader.hpp"

namespace evichain {

// How a service misbehaves when answering clients. Tampering cannot forge
// signatures: a tampered copy still carries the original one, which is the
// whole point.
struct Dishonesty {
  enum class Mode { none, hide, tamper, inject };
  enum class TamperField { data, time, location };

  Mode mode = Mode::none;
  TamperField field = TamperField::data;
  std::optional<Readout> injected;
  bool replace = false;  // inject: drop the true answer instead of appending
};

// A logistics party: owns readers, provisions per-shipment nonces, keeps
// the full readouts its readers send, and answers queries from clients.
class Service {
 public:
  explicit Service(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  // Draws a fresh shared nonce for the tag, replacing any previous one.
  RandomNumber provision_nonce(const TagId& id, Rng& rng);
  std::optional<RandomNumber> nonce_for(const TagId& id) const;

  // Duplicate deliveries (same content) collapse; returns true when stored.
  bool ingest(const Readout& ro);
  std::size_t stored_count() const { return store_.size(); }
  const std::vector<Readout>& stored() const { return store_; }

  void set_dishonesty(Dishonesty d) { dishonesty_ = std::move(d); }
  const Dishonesty& dishonesty() const { return dishonesty_; }

  // What the service actually holds for a search key, in arrival order.
  std::vector<Readout> stored_matching(const Digest& search_key) const;

  // What it tells a client, after applying its dishonesty.
  std::vector<Readout> answer_query(const Digest& search_key) const;

 private:
  std::string name_;
  std::vector<Readout> store_;
  std::set<Digest> seen_;  // content digests of stored readouts
  std::map<TagId, RandomNumber> nonces_;
  Dishonesty dishonesty_;
};

}  // namespace evichain
