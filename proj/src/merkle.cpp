#include "evichain/merkle.hpp"

namespace evichain {

Digest merkle_parent(const Digest& left, const Digest& right) {
  Encoder enc;
  enc.digest(FieldTag::merkle_left, left);
  enc.digest(FieldTag::merkle_right, right);
  return hash(enc.take());
}

Digest merkle_root(std::span<const Digest> leaves) {
  if (leaves.empty()) {
    return hash(Bytes{});
  }
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1) {
    if (level.size() % 2 != 0) {
      level.push_back(level.back());
    }
    std::vector<Digest> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      next.push_back(merkle_parent(level[i], level[i + 1]));
    }
    level = std::move(next);
  }
  return level[0];
}

MerkleProof merkle_prove(std::span<const Digest> leaves, std::size_t index) {
  if (index >= leaves.size()) {
    throw OutOfRangeError("merkle_prove: leaf index out of range");
  }
  MerkleProof proof;
  proof.leaf_index = index;
  std::vector<Digest> level(leaves.begin(), leaves.end());
  std::size_t pos = index;
  while (level.size() > 1) {
    if (level.size() % 2 != 0) {
      level.push_back(level.back());
    }
    const std::size_t sibling = pos ^ 1;
    proof.steps.push_back(ProofStep{(sibling & 1) != 0, level[sibling]});
    std::vector<Digest> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      next.push_back(merkle_parent(level[i], level[i + 1]));
    }
    level = std::move(next);
    pos /= 2;
  }
  return proof;
}

bool merkle_verify(const Digest& leaf, const MerkleProof& proof, const Digest& root) {
  Digest acc = leaf;
  for (const ProofStep& step : proof.steps) {
    acc = step.sibling_on_right ? merkle_parent(acc, step.sibling)
                                : merkle_parent(step.sibling, acc);
  }
  return acc == root;
}

Bytes MerkleProof::encoded() const {
  Encoder enc;
  enc.u64(FieldTag::leaf_index, leaf_index);
  for (const ProofStep& step : steps) {
    const std::uint8_t side = step.sibling_on_right ? 1 : 0;
    enc.raw(FieldTag::proof_side, std::span<const std::uint8_t>(&side, 1));
    enc.digest(FieldTag::digest, step.sibling);
  }
  return enc.take();
}

MerkleProof MerkleProof::decode(std::span<const std::uint8_t> bytes) {
  const std::vector<Field> fields = evichain::decode(bytes);
  if (fields.empty() || fields[0].tag != FieldTag::leaf_index) {
    throw EncodingError("merkle proof must start with leaf_index");
  }
  MerkleProof proof;
  proof.leaf_index = decode_u64(fields[0]);
  if ((fields.size() - 1) % 2 != 0) {
    throw EncodingError("merkle proof steps must come in (side, digest) pairs");
  }
  for (std::size_t i = 1; i < fields.size(); i += 2) {
    if (fields[i].tag != FieldTag::proof_side || fields[i].payload.size() != 1 ||
        fields[i + 1].tag != FieldTag::digest) {
      throw EncodingError("malformed merkle proof step");
    }
    proof.steps.push_back(ProofStep{fields[i].payload[0] != 0, decode_digest(fields[i + 1])});
  }
  return proof;
}

}  // namespace evichain
