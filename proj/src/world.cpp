#include "evichain/world.hpp"

namespace evichain {

World::World(SimParams params, std::uint64_t seed, std::size_t chain_nodes)
    : params_(params), rng_(seed), chain_(chain_nodes, &pki_, params) {
  params_.validate();
}

Timestamp World::advance_clock(std::uint64_t delta) {
  if (delta == 0) {
    throw OrderingError("clock must move forward");
  }
  clock_ += delta;
  return clock_;
}

const Location& World::add_location(Location loc) {
  ensure_fresh_name(locations_, loc.label);
  const std::string label = loc.label;
  return locations_.emplace(label, std::move(loc)).first->second;
}

const Location& World::location(const std::string& label) const {
  const auto it = locations_.find(label);
  if (it == locations_.end()) {
    throw ConfigError("unknown location: " + label);
  }
  return it->second;
}

Service& World::add_service(const std::string& name) {
  ensure_fresh_name(services_, name);
  return services_.emplace(name, Service(name)).first->second;
}

Service& World::service(const std::string& name) {
  const auto it = services_.find(name);
  if (it == services_.end()) {
    throw ConfigError("unknown service: " + name);
  }
  return it->second;
}

Vendor& World::add_vendor(const std::string& name, std::uint64_t key_seed, Timestamp pki_from,
                          Timestamp pki_to) {
  ensure_fresh_name(vendors_, name);
  Vendor vendor(name, generate_keypair(key_seed));
  pki_.add(PkiEntry{vendor.public_key(), pki_from, pki_to});
  return vendors_.emplace(name, std::move(vendor)).first->second;
}

Vendor& World::vendor(const std::string& name) {
  const auto it = vendors_.find(name);
  if (it == vendors_.end()) {
    throw ConfigError("unknown vendor: " + name);
  }
  return it->second;
}

void World::claim_tag_id(const TagId& id) {
  if (!tag_ids_.insert(id).second) {
    throw IdCollisionError("tag id already exists");
  }
}

Tag& World::create_tag(const std::string& name, const std::string& location_label) {
  ensure_fresh_name(tags_, name);
  const Location& at = location(location_label);
  TagId id{};
  rng_.fill(id);
  claim_tag_id(id);
  return tags_.emplace(name, Tag(id, clock_, at)).first->second;
}

Tag& World::tag(const std::string& name) {
  const auto it = tags_.find(name);
  if (it == tags_.end()) {
    throw ConfigError("unknown tag: " + name);
  }
  return it->second;
}

Reader& World::add_reader(const std::string& name, std::uint64_t key_seed,
                          const std::string& owner_service, const std::string& location_label,
                          int submit_node) {
  ensure_fresh_name(readers_, name);
  service(owner_service);  // the owner must exist
  const Location& site = location(location_label);
  if (submit_node < 0 || static_cast<std::size_t>(submit_node) >= chain_.size()) {
    throw ConfigError("reader submit node out of range");
  }
  return readers_
      .emplace(name, Reader(generate_keypair(key_seed), owner_service, site,
                            params_.forget_after, submit_node))
      .first->second;
}

Reader& World::reader(const std::string& name) {
  const auto it = readers_.find(name);
  if (it == readers_.end()) {
    throw ConfigError("unknown reader: " + name);
  }
  return it->second;
}

void World::add_client(const std::string& name) {
  if (!clients_.insert(name).second) {
    throw ConfigError("duplicate name: " + name);
  }
}

}  // namespace evichain
