#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkd/adversary.hpp"
#include "qkd/quantum.hpp"
#include "qkd/rng.hpp"

namespace qkd {

/**
 * The six kept basis combinations. E1/E1P: both parties rectilinear, split
 * by source state. E2/E3: plain source, Alice diagonal, Bob +theta/-theta.
 * E2P/E3P: primed source, Alice diagonal, Bob -theta/+theta.
 */
enum class SubsetLabel : std::uint8_t { E1, E1P, E2, E2P, E3, E3P };

inline constexpr std::size_t kSubsetCount = 6;

constexpr std::size_t subset_index(SubsetLabel label) {
    return static_cast<std::size_t>(label);
}

constexpr std::array<SubsetLabel, kSubsetCount> kSubsetOrder = {
    SubsetLabel::E1, SubsetLabel::E1P, SubsetLabel::E2,
    SubsetLabel::E2P, SubsetLabel::E3, SubsetLabel::E3P,
};

std::string_view to_token(SubsetLabel label);

class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SessionConfig {
    std::uint64_t n_pairs = 0;
    double epsilon = 0.0;   // diagonal-basis probability, in (0, 1]
    double alpha_sq = 0.0;  // squared dominant Schmidt coefficient
    AttackPolicy attack = AttackPolicy::passive();
    std::array<std::uint64_t, kSubsetCount> m_samples{};  // test sizes per subset
    double e_max = 0.0;     // tolerated per-subset error rate, in (0, 1)
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Everything recorded about one photon-pair trial. Eve's action is kept for
/// diagnostics; sifting reads only the bases, the source and Alice's bit.
struct PairRecord {
    std::uint64_t index = 0;
    SourceChoice source = SourceChoice::Plain;
    BasisTag alice_basis = BasisTag::Rect;
    std::uint8_t alice_bit = 0;
    EveAction eve_action;
    BasisTag bob_basis = BasisTag::Rect;
    std::uint8_t bob_bit = 0;
    std::optional<SubsetLabel> subset;

    bool operator==(const PairRecord&) const = default;
};

/// Source uniform over {Plain, Primed}; basis Diag with probability epsilon,
/// Rect otherwise.
std::pair<SourceChoice, BasisTag> alice_choose(double epsilon, Rng& rng);

/// Rect with probability 1-epsilon; PlusTheta and MinusTheta each epsilon/2.
BasisTag bob_choose(double epsilon, Rng& rng);

/// The one Bob basis compatible with a diagonal measurement by Alice, given
/// the source state and Alice's bit.
BasisTag expected_bob_basis(SourceChoice source, int alice_diag_bit);

/// Subset label when the record's bases are compatible, nullopt otherwise.
/// Decided from Alice's data and Bob's announced basis only, never from
/// Bob's bit.
std::optional<SubsetLabel> sift(const PairRecord& record);

/// One full trial: source choice, Alice's measurement, channel transit with
/// optional interception, Bob's measurement, sifting. Every random draw
/// comes from the substream (config.seed, trial_index).
PairRecord run_trial(const SessionConfig& config, std::uint64_t trial_index);

struct SessionResult {
    std::vector<PairRecord> records;
    std::array<std::uint64_t, kSubsetCount> subset_counts{};
    std::uint64_t sifted_count = 0;
};

SessionResult run_session(const SessionConfig& config);

/// One line per trial: index,source,alice_basis,alice_bit,eve_action,
/// bob_basis,bob_bit,subset. Discarded trials leave the subset column empty.
void write_records_csv(std::ostream& out, std::span<const PairRecord> records);
std::string records_csv(std::span<const PairRecord> records);

}  // namespace qkd
