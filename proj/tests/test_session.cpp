#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "qkd/analysis.hpp"
#include "qkd/session.hpp"
#include "test_support.hpp"

using namespace qkd;
using qkd_test::within_sigma;

namespace {

SessionConfig base_config() {
    SessionConfig config;
    config.n_pairs = 100000;
    config.epsilon = 0.1;
    config.alpha_sq = 0.8;
    config.attack = AttackPolicy::passive();
    config.m_samples = {100, 100, 50, 50, 50, 50};
    config.e_max = 0.05;
    config.seed = 2024;
    return config;
}

PairRecord record_with(SourceChoice source, BasisTag alice_basis,
                       std::uint8_t alice_bit, BasisTag bob_basis) {
    PairRecord r;
    r.source = source;
    r.alice_basis = alice_basis;
    r.alice_bit = alice_bit;
    r.bob_basis = bob_basis;
    return r;
}

}  // namespace

TEST_CASE("config validation reports the offending field") {
    SessionConfig config = base_config();
    config.n_pairs = 0;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("n_pairs"),
                         ConfigError);

    config = base_config();
    config.epsilon = 0.0;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("epsilon"),
                         ConfigError);
    config.epsilon = 1.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = base_config();
    config.alpha_sq = -0.2;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("alpha_sq"),
                         ConfigError);

    config = base_config();
    config.m_samples[2] = 0;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("m_samples[2]"),
                         ConfigError);

    config = base_config();
    config.e_max = 1.0;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("e_max"),
                         ConfigError);

    CHECK_NOTHROW(base_config().validate());
}

TEST_CASE("alice basis bias and source balance") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i)
        CHECK(alice_choose(1.0, rng).second == BasisTag::Diag);

    const std::uint64_t n = 1000000;
    std::uint64_t diag = 0;
    std::uint64_t primed = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto [source, basis] = alice_choose(0.1, rng);
        diag += basis == BasisTag::Diag;
        primed += source == SourceChoice::Primed;
    }
    CHECK(within_sigma(diag, n, 0.1));
    CHECK(within_sigma(primed, n, 0.5));
}

TEST_CASE("bob basis distribution") {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i)
        CHECK(bob_choose(1.0, rng) != BasisTag::Rect);

    const std::uint64_t n = 1000000;
    std::uint64_t rect = 0;
    std::uint64_t plus = 0;
    std::uint64_t minus = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        switch (bob_choose(0.2, rng)) {
            case BasisTag::Rect: ++rect; break;
            case BasisTag::PlusTheta: ++plus; break;
            case BasisTag::MinusTheta: ++minus; break;
            default: FAIL("bob picked an impossible basis");
        }
    }
    CHECK(within_sigma(rect, n, 0.8));
    CHECK(within_sigma(plus, n, 0.1));
    CHECK(within_sigma(minus, n, 0.1));
}

TEST_CASE("compatible bob basis for a diagonal alice measurement") {
    CHECK(expected_bob_basis(SourceChoice::Plain, 0) == BasisTag::PlusTheta);
    CHECK(expected_bob_basis(SourceChoice::Plain, 1) == BasisTag::MinusTheta);
    CHECK(expected_bob_basis(SourceChoice::Primed, 0) == BasisTag::MinusTheta);
    CHECK(expected_bob_basis(SourceChoice::Primed, 1) == BasisTag::PlusTheta);
}

TEST_CASE("sifting matrix over all basis and bit combinations") {
    const std::array<BasisTag, 3> bob_bases = {
        BasisTag::Rect, BasisTag::PlusTheta, BasisTag::MinusTheta};

    for (SourceChoice source : {SourceChoice::Plain, SourceChoice::Primed}) {
        // both rectilinear: kept regardless of bits
        for (std::uint8_t bit : {0, 1}) {
            for (BasisTag bob : bob_bases) {
                const auto label =
                    sift(record_with(source, BasisTag::Rect, bit, bob));
                if (bob == BasisTag::Rect) {
                    REQUIRE(label.has_value());
                    CHECK(*label == (source == SourceChoice::Plain
                                         ? SubsetLabel::E1
                                         : SubsetLabel::E1P));
                } else {
                    CHECK_FALSE(label.has_value());
                }
            }
        }
        // diagonal alice: kept only in the one compatible rotated basis
        for (std::uint8_t bit : {0, 1}) {
            for (BasisTag bob : bob_bases) {
                const auto label =
                    sift(record_with(source, BasisTag::Diag, bit, bob));
                if (bob != expected_bob_basis(source, bit)) {
                    CHECK_FALSE(label.has_value());
                    continue;
                }
                REQUIRE(label.has_value());
                if (source == SourceChoice::Plain)
                    CHECK(*label == (bit == 0 ? SubsetLabel::E2 : SubsetLabel::E3));
                else
                    CHECK(*label ==
                          (bit == 0 ? SubsetLabel::E2P : SubsetLabel::E3P));
            }
        }
    }

    CHECK(*sift(record_with(SourceChoice::Primed, BasisTag::Diag, 1,
                            BasisTag::PlusTheta)) == SubsetLabel::E3P);
}

TEST_CASE("a passive channel gives perfectly correlated sifted bits") {
    SessionConfig config = base_config();
    config.n_pairs = 200000;
    const SessionResult session = run_session(config);
    std::uint64_t sifted = 0;
    for (const PairRecord& r : session.records) {
        if (!r.subset) continue;
        ++sifted;
        REQUIRE(r.alice_bit == r.bob_bit);
    }
    CHECK(sifted == session.sifted_count);
    CHECK(sifted > 0);
}

TEST_CASE("sifted fraction converges to (1-eps)^2 + eps^2/2") {
    SessionConfig config = base_config();
    config.n_pairs = 1000000;
    config.epsilon = 0.1;
    const SessionResult session = run_session(config);
    const double fraction = static_cast<double>(session.sifted_count) /
                            static_cast<double>(config.n_pairs);
    CHECK(std::abs(fraction - 0.815) <= 0.002);
    CHECK(within_sigma(session.sifted_count, config.n_pairs, 0.815));
}

TEST_CASE("diagonal subsets each hold about N eps^2 / 8 records") {
    SessionConfig config = base_config();
    config.n_pairs = 1000000;
    config.epsilon = 0.2;
    const SessionResult session = run_session(config);
    for (SubsetLabel label : {SubsetLabel::E2, SubsetLabel::E2P, SubsetLabel::E3,
                              SubsetLabel::E3P}) {
        const double tally =
            static_cast<double>(session.subset_counts[subset_index(label)]);
        CHECK(std::abs(tally - 5000.0) <= 300.0);
    }
}

TEST_CASE("epsilon = 1 leaves the rectilinear subsets empty") {
    SessionConfig config = base_config();
    config.epsilon = 1.0;
    const SessionResult session = run_session(config);
    CHECK(session.subset_counts[subset_index(SubsetLabel::E1)] == 0);
    CHECK(session.subset_counts[subset_index(SubsetLabel::E1P)] == 0);
    CHECK(session.sifted_count > 0);
}

TEST_CASE("sifted key bits are balanced even for a skewed source") {
    SessionConfig config = base_config();
    config.n_pairs = 1000000;
    const SessionResult session = run_session(config);
    std::uint64_t zeros = 0;
    for (const PairRecord& r : session.records)
        if (r.subset) zeros += r.alice_bit == 0;
    CHECK(within_sigma(zeros, session.sifted_count, 0.5));
}

TEST_CASE("product source under a rectilinear attack stays all zeros") {
    SessionConfig config = base_config();
    config.alpha_sq = 1.0;
    config.attack = AttackPolicy(1.0, 0.0, 0.0);
    const SessionResult session = run_session(config);
    std::uint64_t e1_records = 0;
    for (const PairRecord& r : session.records) {
        if (r.subset != SubsetLabel::E1) continue;
        ++e1_records;
        REQUIRE(r.alice_bit == 0);
        REQUIRE(r.bob_bit == 0);
    }
    CHECK(e1_records > 0);
}

TEST_CASE("sessions are deterministic and order independent") {
    SessionConfig config = base_config();
    config.n_pairs = 5000;
    config.attack = AttackPolicy(0.2, 0.1, 0.05);

    const SessionResult first = run_session(config);
    const SessionResult second = run_session(config);
    REQUIRE(first.records.size() == second.records.size());
    CHECK(first.records == second.records);
    CHECK(first.subset_counts == second.subset_counts);

    // regenerating trials in reverse order reproduces the same records
    std::vector<PairRecord> reversed(config.n_pairs);
    for (std::uint64_t i = config.n_pairs; i-- > 0;)
        reversed[i] = run_trial(config, i);
    CHECK(reversed == first.records);
}

TEST_CASE("records render to the documented CSV tokens") {
    std::vector<PairRecord> records;
    PairRecord r = record_with(SourceChoice::Plain, BasisTag::Rect, 0,
                               BasisTag::Rect);
    r.index = 0;
    r.bob_bit = 0;
    r.subset = sift(r);
    records.push_back(r);

    r = record_with(SourceChoice::Primed, BasisTag::Diag, 1,
                    BasisTag::PlusTheta);
    r.index = 1;
    r.eve_action = EveAction{EveActionTag::MeasuredMinus, 1};
    r.bob_bit = 1;
    r.subset = sift(r);
    records.push_back(r);

    r = record_with(SourceChoice::Plain, BasisTag::Diag, 0,
                    BasisTag::MinusTheta);
    r.index = 2;
    r.eve_action = EveAction{EveActionTag::MeasuredRect, 0};
    r.bob_bit = 1;
    r.subset = sift(r);
    records.push_back(r);

    const std::string expected =
        "index,source,alice_basis,alice_bit,eve_action,bob_basis,bob_bit,"
        "subset\n"
        "0,plain,rect,0,passive,rect,0,e1\n"
        "1,primed,diag,1,measured_minus,plus_theta,1,e3p\n"
        "2,plain,diag,0,measured_rect,minus_theta,1,\n";
    CHECK(records_csv(records) == expected);
}
