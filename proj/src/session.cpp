#include "qkd/session.hpp"

#include <ostream>
#include <sstream>

namespace qkd {

std::string_view to_token(SubsetLabel label) {
    switch (label) {
        case SubsetLabel::E1: return "e1";
        case SubsetLabel::E1P: return "e1p";
        case SubsetLabel::E2: return "e2";
        case SubsetLabel::E2P: return "e2p";
        case SubsetLabel::E3: return "e3";
        case SubsetLabel::E3P: return "e3p";
    }
    return "?";
}

void SessionConfig::validate() const {
    if (n_pairs < 1) throw ConfigError("n_pairs: must be at least 1");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw ConfigError(
            "epsilon: must satisfy 0 < epsilon <= 1; with epsilon = 0 the "
            "diagonal test subsets stay empty and eavesdropping along the "
            "dominant basis cannot be detected");
    if (!(alpha_sq >= 0.0 && alpha_sq <= 1.0))
        throw ConfigError("alpha_sq: must be in [0, 1]");
    for (std::size_t i = 0; i < kSubsetCount; ++i)
        if (m_samples[i] < 1)
            throw ConfigError("m_samples[" + std::to_string(i) +
                              "]: must be at least 1");
    if (!(e_max > 0.0 && e_max < 1.0))
        throw ConfigError("e_max: must be in (0, 1)");
}

std::pair<SourceChoice, BasisTag> alice_choose(double epsilon, Rng& rng) {
    const SourceChoice source =
        rng.bernoulli(0.5) ? SourceChoice::Plain : SourceChoice::Primed;
    const BasisTag basis =
        rng.bernoulli(epsilon) ? BasisTag::Diag : BasisTag::Rect;
    return {source, basis};
}

BasisTag bob_choose(double epsilon, Rng& rng) {
    const double u = rng.next_unit();
    if (u < 1.0 - epsilon) return BasisTag::Rect;
    return (u - (1.0 - epsilon)) < epsilon / 2.0 ? BasisTag::PlusTheta
                                                 : BasisTag::MinusTheta;
}

BasisTag expected_bob_basis(SourceChoice source, int alice_diag_bit) {
    if (source == SourceChoice::Plain)
        return alice_diag_bit == 0 ? BasisTag::PlusTheta : BasisTag::MinusTheta;
    return alice_diag_bit == 0 ? BasisTag::MinusTheta : BasisTag::PlusTheta;
}

std::optional<SubsetLabel> sift(const PairRecord& record) {
    if (record.alice_basis == BasisTag::Rect) {
        if (record.bob_basis != BasisTag::Rect) return std::nullopt;
        return record.source == SourceChoice::Plain ? SubsetLabel::E1
                                                    : SubsetLabel::E1P;
    }
    if (record.bob_basis != expected_bob_basis(record.source, record.alice_bit))
        return std::nullopt;
    if (record.source == SourceChoice::Plain)
        return record.bob_basis == BasisTag::PlusTheta ? SubsetLabel::E2
                                                       : SubsetLabel::E3;
    return record.bob_basis == BasisTag::MinusTheta ? SubsetLabel::E2P
                                                    : SubsetLabel::E3P;
}

PairRecord run_trial(const SessionConfig& config, std::uint64_t trial_index) {
    Rng rng(config.seed, trial_index);
    const Amplitudes amps = Amplitudes::from_alpha_sq(config.alpha_sq);

    PairRecord record;
    record.index = trial_index;

    auto [source, alice_basis] = alice_choose(config.epsilon, rng);
    record.source = source;
    record.alice_basis = alice_basis;

    const PairState pair = make_pair_state(amps, source);
    auto [alice_bit, photon] =
        measure_pair_first(pair, basis_for(alice_basis, amps), rng);
    record.alice_bit = static_cast<std::uint8_t>(alice_bit);

    auto [resent, action] = eve_intercept(photon, config.attack, amps, rng);
    record.eve_action = action;

    record.bob_basis = bob_choose(config.epsilon, rng);
    auto [bob_bit, collapsed] =
        measure_qubit(resent, basis_for(record.bob_basis, amps), rng);
    (void)collapsed;
    record.bob_bit = static_cast<std::uint8_t>(bob_bit);

    record.subset = sift(record);
    return record;
}

SessionResult run_session(const SessionConfig& config) {
    config.validate();
    SessionResult result;
    result.records.reserve(config.n_pairs);
    for (std::uint64_t i = 0; i < config.n_pairs; ++i) {
        PairRecord record = run_trial(config, i);
        if (record.subset) {
            ++result.subset_counts[subset_index(*record.subset)];
            ++result.sifted_count;
        }
        result.records.push_back(record);
    }
    return result;
}

void write_records_csv(std::ostream& out, std::span<const PairRecord> records) {
    out << "index,source,alice_basis,alice_bit,eve_action,bob_basis,bob_bit,"
           "subset\n";
    for (const PairRecord& r : records) {
        out << r.index << ',' << to_token(r.source) << ','
            << to_token(r.alice_basis) << ',' << int(r.alice_bit) << ','
            << to_token(r.eve_action.tag) << ',' << to_token(r.bob_basis)
            << ',' << int(r.bob_bit) << ',';
        if (r.subset) out << to_token(*r.subset);
        out << '\n';
    }
}

std::string records_csv(std::span<const PairRecord> records) {
    std::ostringstream out;
    write_records_csv(out, records);
    return out.str();
}

}  // namespace qkd
