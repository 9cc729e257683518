#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "qkd/postprocessing.hpp"
#include "test_support.hpp"

using namespace qkd;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    return bits;
}

// flips exactly `errors` distinct positions
std::vector<std::uint8_t> corrupt(const std::vector<std::uint8_t>& bits,
                                  std::size_t errors, Rng& rng) {
    std::vector<std::uint8_t> out = bits;
    std::vector<std::size_t> positions(bits.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    for (std::size_t k = 0; k < errors; ++k) {
        const std::size_t j = k + rng.below(positions.size() - k);
        std::swap(positions[k], positions[j]);
        out[positions[k]] ^= 1;
    }
    return out;
}

std::size_t hamming(const std::vector<std::uint8_t>& a,
                    const std::vector<std::uint8_t>& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

}  // namespace

TEST_CASE("identical keys pass through with only block parities disclosed") {
    Rng gen(1);
    SiftedKey alice{random_bits(256, gen), Party::Alice};
    SiftedKey bob{alice.bits, Party::Bob};

    Rng rng(2);
    const ReconcileResult result = reconcile(alice, bob, 3, 16, rng);
    CHECK(result.key_a.bits == alice.bits);
    CHECK(result.key_b.bits == alice.bits);
    CHECK(result.leaked == 3 * 256 / 16);
}

TEST_CASE("a single error costs log2(block) + 1 disclosures") {
    Rng gen(3);
    SiftedKey alice{random_bits(8, gen), Party::Alice};
    SiftedKey bob{alice.bits, Party::Bob};
    bob.bits[5] ^= 1;

    Rng rng(4);
    const ReconcileResult result = reconcile(alice, bob, 1, 8, rng);
    CHECK(result.key_a.bits == result.key_b.bits);
    CHECK(result.leaked == 4);  // 1 block parity + ceil(log2 8) probes
}

TEST_CASE("mismatched lengths and zero block size are rejected") {
    SiftedKey alice{{0, 1, 0}, Party::Alice};
    SiftedKey bob{{0, 1}, Party::Bob};
    Rng rng(5);
    CHECK_THROWS_AS(reconcile(alice, bob, 1, 8, rng), LengthMismatch);
    SiftedKey bob3{{0, 1, 1}, Party::Bob};
    CHECK_THROWS_AS(reconcile(alice, bob3, 1, 0, rng), std::invalid_argument);
    // empty keys are a no-op
    SiftedKey empty_a{{}, Party::Alice};
    SiftedKey empty_b{{}, Party::Bob};
    const ReconcileResult result = reconcile(empty_a, empty_b, 4, 8, rng);
    CHECK(result.leaked == 0);
}

TEST_CASE("reconciliation converges on error rates up to 20 percent") {
    const std::size_t n = 2048;
    for (int trial = 0; trial < 100; ++trial) {
        Rng gen(1000 + trial);
        SiftedKey alice{random_bits(n, gen), Party::Alice};
        const std::size_t errors =
            static_cast<std::size_t>(0.002 * static_cast<double>(trial) *
                                     static_cast<double>(n));
        SiftedKey bob{corrupt(alice.bits, errors, gen), Party::Bob};
        REQUIRE(hamming(alice.bits, bob.bits) == errors);

        Rng rng(2000 + trial);
        const ReconcileResult result = reconcile(alice, bob, 6, 4, rng);
        INFO("trial ", trial, " with ", errors, " errors");
        CHECK(result.key_a.bits == result.key_b.bits);
    }
}

TEST_CASE("reconciliation is symmetric in its two inputs") {
    const std::size_t n = 512;
    for (int trial = 0; trial < 20; ++trial) {
        Rng gen(300 + trial);
        SiftedKey alice{random_bits(n, gen), Party::Alice};
        SiftedKey bob{corrupt(alice.bits, n / 10, gen), Party::Bob};

        Rng rng_ab(4000 + trial);
        Rng rng_ba(4000 + trial);
        const ReconcileResult ab = reconcile(alice, bob, 5, 8, rng_ab);
        const ReconcileResult ba = reconcile(bob, alice, 5, 8, rng_ba);
        CHECK(ab.key_a.bits == ba.key_b.bits);
        CHECK(ab.key_b.bits == ba.key_a.bits);
        CHECK(ab.leaked == ba.leaked);
    }
}

TEST_CASE("privacy amplification length accounting") {
    Rng gen(6);
    SiftedKey key{random_bits(300, gen), Party::Alice};

    const FinalKey out = privacy_amplify(key, 100, 16, 99);
    CHECK(out.bits.size() == 300 - 100 - 16);
    CHECK(out.leaked_bits == 100);

    CHECK_THROWS_AS(privacy_amplify(key, 290, 16, 99), KeyTooShort);
    CHECK_THROWS_AS(privacy_amplify(key, 300, 0, 99), KeyTooShort);
    CHECK_THROWS_AS(privacy_amplify(key, 0, 300, 99), KeyTooShort);
}

TEST_CASE("privacy amplification is deterministic and linear over GF(2)") {
    const std::size_t n = 256;
    const std::uint64_t leaked = 64;
    const std::uint64_t margin = 16;
    for (int trial = 0; trial < 100; ++trial) {
        Rng gen(500 + trial);
        SiftedKey k1{random_bits(n, gen), Party::Alice};
        SiftedKey k2{random_bits(n, gen), Party::Alice};
        SiftedKey k12{k1.bits, Party::Alice};
        for (std::size_t i = 0; i < n; ++i) k12.bits[i] ^= k2.bits[i];

        const std::uint64_t seed = 9000 + trial;
        const FinalKey f1 = privacy_amplify(k1, leaked, margin, seed);
        const FinalKey f2 = privacy_amplify(k2, leaked, margin, seed);
        const FinalKey f12 = privacy_amplify(k12, leaked, margin, seed);
        REQUIRE(f1.bits.size() == f12.bits.size());
        for (std::size_t i = 0; i < f12.bits.size(); ++i)
            CHECK(f12.bits[i] == (f1.bits[i] ^ f2.bits[i]));

        const FinalKey again = privacy_amplify(k1, leaked, margin, seed);
        CHECK(again.bits == f1.bits);
    }

    // all-zero input hashes to all zeros
    SiftedKey zeros{std::vector<std::uint8_t>(n, 0), Party::Alice};
    const FinalKey fz = privacy_amplify(zeros, leaked, margin, 1);
    CHECK(std::count(fz.bits.begin(), fz.bits.end(), 0) ==
          static_cast<long>(fz.bits.size()));
}

TEST_CASE("golden 64-bit amplification vector") {
    // 0xfeedfacecafebeef, most significant bit first
    SiftedKey key{hex_to_bits("feedfacecafebeef", 64), Party::Alice};
    const FinalKey out = privacy_amplify(key, 16, 16, 42);
    REQUIRE(out.bits.size() == 32);
    CHECK(bits_to_hex(out.bits) == "bdd75444");
}

TEST_CASE("hex encoding is msb-first with trailing zero padding") {
    const std::vector<std::uint8_t> bits = {0, 0, 0, 1, 0, 0, 1, 0};
    CHECK(bits_to_hex(bits) == "12");
    const std::vector<std::uint8_t> six = {1, 0, 1, 1, 1, 1};
    CHECK(bits_to_hex(six) == "bc");  // 1011 + 11(00)
    CHECK(bits_to_hex({}) == "");

    CHECK_THROWS_AS(hex_to_bits("f", 5), std::invalid_argument);
    CHECK_THROWS_AS(hex_to_bits("xy", 8), std::invalid_argument);

    Rng gen(7);
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 130u}) {
        const std::vector<std::uint8_t> original = random_bits(n, gen);
        CHECK(hex_to_bits(bits_to_hex(original), n) == original);
    }
}
