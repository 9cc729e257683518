#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd {

enum class Party : std::uint8_t { Alice, Bob };

struct SiftedKey {
    std::vector<std::uint8_t> bits;
    Party origin = Party::Alice;
};

struct FinalKey {
    std::vector<std::uint8_t> bits;
    std::uint64_t leaked_bits = 0;  // parity disclosures paid during reconciliation
};

class LengthMismatch : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class KeyTooShort : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReconcileResult {
    SiftedKey key_a;
    SiftedKey key_b;
    std::uint64_t leaked = 0;
};

/**
 * Parity-based error reconciliation over shuffled blocks. Each round applies
 * a shared random permutation to both keys, compares block parities, and
 * binary-searches every odd block down to one differing bit, which both
 * sides replace by a shared coin toss. `leaked` counts every disclosed
 * parity: one per compared block plus one per bisection probe, so locating a
 * single error in a block of size B costs ceil(log2 B) + 1 disclosures.
 *
 * Keys come out equal on error rates below roughly a quarter given enough
 * rounds; this is an observed property of the scheme, not a guarantee.
 */
ReconcileResult reconcile(const SiftedKey& key_a, const SiftedKey& key_b,
                          unsigned rounds, std::size_t block_size, Rng& rng);

/**
 * Compress the reconciled key with a seed-derived random binary matrix over
 * GF(2): output length = input length - leaked - safety_margin, and output
 * bit j is the parity of the key masked by row j. Deterministic in the key
 * and hash_seed.
 */
FinalKey privacy_amplify(const SiftedKey& key, std::uint64_t leaked,
                         std::uint64_t safety_margin, std::uint64_t hash_seed);

/// Lowercase hex, most significant bit of each nibble first; a length that
/// is not a multiple of four is padded with trailing zero bits.
std::string bits_to_hex(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> hex_to_bits(std::string_view hex,
                                      std::size_t bit_count);

}  // namespace qkd
