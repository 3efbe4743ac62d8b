#pragma once

#include <map>
#include <set>
#include <string>

#include "evichain/chain.hpp"
#include "evichain/proximity.hpp"
#include "evichain/reader.hpp"
#include "evichain/service.hpp"
#include "evichain/tag.hpp"
#include "evichain/vendor.hpp"

namespace evichain {

// The registry every simulation runs inside: one clock, one seeded random
// source, and uniquely named actors. Registration enforces the structural
// invariants (unique names, unique tag ids, readers anchored to an existing
// owner and site).
class World {
 public:
  World(SimParams params, std::uint64_t seed, std::size_t chain_nodes);

  const SimParams& params() const { return params_; }
  Rng& rng() { return rng_; }

  Timestamp now() const { return clock_; }
  // The clock only moves forward. delta must be positive.
  Timestamp advance_clock(std::uint64_t delta);

  const Location& add_location(Location loc);
  const Location& location(const std::string& label) const;

  Service& add_service(const std::string& name);
  Service& service(const std::string& name);

  Vendor& add_vendor(const std::string& name, std::uint64_t key_seed, Timestamp pki_from,
                     Timestamp pki_to);
  Vendor& vendor(const std::string& name);

  // Draws a fresh id, registers it, places the tag at an existing location.
  Tag& create_tag(const std::string& name, const std::string& location_label);
  Tag& tag(const std::string& name);
  // Uniqueness gate for manufactured ids; a collision is fatal.
  void claim_tag_id(const TagId& id);

  Reader& add_reader(const std::string& name, std::uint64_t key_seed,
                     const std::string& owner_service, const std::string& location_label,
                     int submit_node = 0);
  Reader& reader(const std::string& name);
  const std::map<std::string, Reader>& readers() const { return readers_; }

  void add_client(const std::string& name);
  bool has_client(const std::string& name) const { return clients_.count(name) > 0; }
  const std::set<std::string>& clients() const { return clients_; }

  PkiStub& pki() { return pki_; }
  const PkiStub& pki() const { return pki_; }
  ChainNetwork& chain() { return chain_; }
  const ChainNetwork& chain() const { return chain_; }

 private:
  template <typename Map>
  void ensure_fresh_name(const Map& map, const std::string& name) const {
    if (map.count(name) > 0) {
      throw ConfigError("duplicate name: " + name);
    }
  }

  SimParams params_;
  Rng rng_;
  Timestamp clock_ = 0;
  PkiStub pki_;
  ChainNetwork chain_;
  std::map<std::string, Location> locations_;
  std::map<std::string, Service> services_;
  std::map<std::string, Vendor> vendors_;
  std::map<std::string, Tag> tags_;
  std::map<std::string, Reader> readers_;
  std::set<std::string> clients_;
  std::set<TagId> tag_ids_;
};

}  // namespace evichain
