#include "qkd/postprocessing.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace qkd {

namespace {

constexpr std::uint64_t kMatrixStream = 0x484153484D545258ULL;

std::uint8_t parity_range(const std::vector<std::uint8_t>& bits,
                          std::size_t lo, std::size_t hi) {
    std::uint8_t p = 0;
    for (std::size_t i = lo; i < hi; ++i) p ^= bits[i] & 1;
    return p;
}

}  // namespace

ReconcileResult reconcile(const SiftedKey& key_a, const SiftedKey& key_b,
                          unsigned rounds, std::size_t block_size, Rng& rng) {
    if (key_a.bits.size() != key_b.bits.size())
        throw LengthMismatch("keys differ in length: " +
                             std::to_string(key_a.bits.size()) + " vs " +
                             std::to_string(key_b.bits.size()));
    if (block_size == 0)
        throw std::invalid_argument("block_size must be positive");

    ReconcileResult result{key_a, key_b, 0};
    std::vector<std::uint8_t>& a = result.key_a.bits;
    std::vector<std::uint8_t>& b = result.key_b.bits;
    const std::size_t n = a.size();
    if (n == 0) return result;

    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::vector<std::uint8_t> pa(n);
    std::vector<std::uint8_t> pb(n);

    for (unsigned round = 0; round < rounds; ++round) {
        for (std::size_t k = n - 1; k > 0; --k) {
            const std::size_t j = rng.below(k + 1);
            std::swap(perm[k], perm[j]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            pa[i] = a[perm[i]];
            pb[i] = b[perm[i]];
        }
        for (std::size_t start = 0; start < n; start += block_size) {
            const std::size_t end = std::min(start + block_size, n);
            ++result.leaked;
            if (parity_range(pa, start, end) == parity_range(pb, start, end))
                continue;
            std::size_t lo = start;
            std::size_t hi = end;
            while (hi - lo > 1) {
                const std::size_t mid = lo + (hi - lo) / 2;
                ++result.leaked;
                if (parity_range(pa, lo, mid) != parity_range(pb, lo, mid))
                    hi = mid;
                else
                    lo = mid;
            }
            const std::uint8_t fix = static_cast<std::uint8_t>(rng.below(2));
            pa[lo] = pb[lo] = fix;
            a[perm[lo]] = b[perm[lo]] = fix;
        }
    }
    return result;
}

FinalKey privacy_amplify(const SiftedKey& key, std::uint64_t leaked,
                         std::uint64_t safety_margin, std::uint64_t hash_seed) {
    const std::uint64_t n = key.bits.size();
    if (leaked >= n || safety_margin >= n - leaked)
        throw KeyTooShort("key of " + std::to_string(n) +
                          " bits cannot absorb " + std::to_string(leaked) +
                          " leaked bits plus a margin of " +
                          std::to_string(safety_margin));
    const std::uint64_t out_len = n - leaked - safety_margin;

    const std::size_t words = static_cast<std::size_t>((n + 63) / 64);
    std::vector<std::uint64_t> packed(words, 0);
    for (std::uint64_t i = 0; i < n; ++i)
        if (key.bits[i] & 1) packed[i >> 6] |= 1ULL << (i & 63);

    Rng rng(hash_seed, kMatrixStream);
    FinalKey out;
    out.leaked_bits = leaked;
    out.bits.resize(out_len);
    for (std::uint64_t row = 0; row < out_len; ++row) {
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < words; ++w) acc ^= rng.next_u64() & packed[w];
        out.bits[row] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
    }
    return out;
}

std::string bits_to_hex(std::span<const std::uint8_t> bits) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve((bits.size() + 3) / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nibble = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            nibble <<= 1;
            if (i + j < bits.size()) nibble |= bits[i + j] & 1;
        }
        hex.push_back(kDigits[nibble]);
    }
    return hex;
}

std::vector<std::uint8_t> hex_to_bits(std::string_view hex,
                                      std::size_t bit_count) {
    if (hex.size() * 4 < bit_count)
        throw std::invalid_argument("hex string too short for bit count");
    std::vector<std::uint8_t> bits;
    bits.reserve(bit_count);
    for (std::size_t i = 0; i < bit_count; ++i) {
        const char c = hex[i / 4];
        unsigned nibble;
        if (c >= '0' && c <= '9')
            nibble = static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f')
            nibble = static_cast<unsigned>(c - 'a') + 10;
        else
            throw std::invalid_argument("invalid hex digit");
        bits.push_back(static_cast<std::uint8_t>((nibble >> (3 - i % 4)) & 1));
    }
    return bits;
}

}  // namespace qkd
