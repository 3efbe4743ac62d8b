#include "evichain/service.hpp"

namespace evichain {

RandomNumber Service::provision_nonce(const TagId& id, Rng& rng) {
  RandomNumber n{};
  rng.fill(n);
  nonces_[id] = n;
  return n;
}

std::optional<RandomNumber> Service::nonce_for(const TagId& id) const {
  const auto it = nonces_.find(id);
  if (it == nonces_.end()) {
    return std::nullopt;
  }
  return it->second;
}

bool Service::ingest(const Readout& ro) {
  const Digest d = readout_digest(ro);
  if (!seen_.insert(d).second) {
    return false;
  }
  store_.push_back(ro);
  return true;
}

std::vector<Readout> Service::stored_matching(const Digest& search_key) const {
  std::vector<Readout> out;
  for (const Readout& ro : store_) {
    if (readout_search_key(ro.nonce, ro.tag_id) == search_key) {
      out.push_back(ro);
    }
  }
  return out;
}

namespace {

Readout tampered_copy(const Readout& ro, Dishonesty::TamperField field) {
  Readout copy = ro;
  switch (field) {
    case Dishonesty::TamperField::data:
      if (copy.data.empty()) {
        copy.data.push_back(0xff);
      } else {
        copy.data[0] ^= 0xff;
      }
      break;
    case Dishonesty::TamperField::time:
      copy.time += 7200;
      break;
    case Dishonesty::TamperField::location:
      copy.location += "-elsewhere";
      break;
  }
  return copy;
}

}  // namespace

std::vector<Readout> Service::answer_query(const Digest& search_key) const {
  std::vector<Readout> honest = stored_matching(search_key);
  switch (dishonesty_.mode) {
    case Dishonesty::Mode::none:
      return honest;
    case Dishonesty::Mode::hide:
      return {};
    case Dishonesty::Mode::tamper: {
      std::vector<Readout> out;
      out.reserve(honest.size());
      for (const Readout& ro : honest) {
        out.push_back(tampered_copy(ro, dishonesty_.field));
      }
      return out;
    }
    case Dishonesty::Mode::inject: {
      std::vector<Readout> out;
      if (!dishonesty_.replace) {
        out = honest;
      }
      if (dishonesty_.injected) {
        out.push_back(*dishonesty_.injected);
      }
      return out;
    }
  }
  return honest;
}

}  // namespace evichain
