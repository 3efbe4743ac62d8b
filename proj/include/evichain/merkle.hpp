#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evichain/crypto.hpp"
#include "evichain/encoding.hpp"

namespace evichain {

// Binary Merkle tree over a leaf digest list. An odd node at any level is
// paired with a copy of itself. A single leaf is its own root; the empty
// tree's root is the hash of the empty byte string. Interior nodes hash the
// canonical encoding of (merkle_left, merkle_right), so leaf and interior
// preimages cannot collide.
Digest merkle_root(std::span<const Digest> leaves);

struct ProofStep {
  bool sibling_on_right;  // true: sibling is the right child at this level
  Digest sibling;

  bool operator==(const ProofStep&) const = default;
};

struct MerkleProof {
  std::uint64_t leaf_index = 0;
  std::vector<ProofStep> steps;

  bool operator==(const MerkleProof&) const = default;

  Bytes encoded() const;
  static MerkleProof decode(std::span<const std::uint8_t> bytes);
};

// Throws OutOfRangeError when index >= leaves.size().
MerkleProof merkle_prove(std::span<const Digest> leaves, std::size_t index);

// Folds the leaf up the proof path and compares with root. Pure function of
// its arguments; a wrong leaf, wrong path, or wrong root all return false.
bool merkle_verify(const Digest& leaf, const MerkleProof& proof, const Digest& root);

Digest merkle_parent(const Digest& left, const Digest& right);

}  // namespace evichain
