#include "qkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "json.hpp"

namespace qkd {

InsufficientSamples::InsufficientSamples(SubsetLabel subset,
                                         std::uint64_t have,
                                         std::uint64_t need)
    : std::runtime_error("insufficient samples in subset " +
                         std::string(to_token(subset)) + ": have " +
                         std::to_string(have) + ", need " +
                         std::to_string(need) +
                         " (epsilon or n_pairs too small)"),
      subset_(subset) {}

EstimateOutcome estimate_errors(
    std::span<const PairRecord> records,
    const std::array<std::uint64_t, kSubsetCount>& m_samples, double epsilon,
    double e_max, Rng& rng) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must be in (0, 1]");

    std::array<std::vector<std::uint64_t>, kSubsetCount> members;
    for (std::uint64_t i = 0; i < records.size(); ++i)
        if (records[i].subset)
            members[subset_index(*records[i].subset)].push_back(i);

    for (SubsetLabel label : kSubsetOrder) {
        const std::size_t s = subset_index(label);
        if (m_samples[s] < 1)
            throw std::invalid_argument("test sample sizes must be positive");
        if (members[s].size() < m_samples[s])
            throw InsufficientSamples(label, members[s].size(), m_samples[s]);
    }

    EstimateOutcome outcome;
    ErrorReport& report = outcome.report;
    report.epsilon = epsilon;
    report.e_max = e_max;

    std::vector<std::uint8_t> is_test(records.size(), 0);
    std::uint64_t total_samples = 0;
    std::uint64_t total_mismatches = 0;
    bool all_below = true;

    for (SubsetLabel label : kSubsetOrder) {
        const std::size_t s = subset_index(label);
        std::vector<std::uint64_t>& idx = members[s];
        const std::uint64_t m = m_samples[s];
        // partial Fisher-Yates; the first m entries become the test sample
        for (std::uint64_t k = 0; k < m; ++k) {
            const std::uint64_t j = k + rng.below(idx.size() - k);
            std::swap(idx[k], idx[j]);
        }
        std::uint64_t mismatches = 0;
        for (std::uint64_t k = 0; k < m; ++k) {
            const PairRecord& r = records[idx[k]];
            is_test[idx[k]] = 1;
            mismatches += r.alice_bit != r.bob_bit;
        }
        const double rate =
            static_cast<double>(mismatches) / static_cast<double>(m);
        report.subsets[s] = {m, mismatches, rate};
        total_samples += m;
        total_mismatches += mismatches;
        all_below = all_below && rate < e_max;
    }

    const double one_minus = 1.0 - epsilon;
    const double w_rect = one_minus * one_minus;
    const double w_diag = epsilon * epsilon / 4.0;
    const double denom = 2.0 * (w_rect + epsilon * epsilon / 2.0);
    const auto rate = [&](SubsetLabel l) {
        return report.subsets[subset_index(l)].rate;
    };
    report.average_error =
        (w_rect * (rate(SubsetLabel::E1) + rate(SubsetLabel::E1P)) +
         w_diag * (rate(SubsetLabel::E2) + rate(SubsetLabel::E3) +
                   rate(SubsetLabel::E2P) + rate(SubsetLabel::E3P))) /
        denom;
    report.pooled_error = static_cast<double>(total_mismatches) /
                          static_cast<double>(total_samples);
    report.refined_accept = all_below;
    report.naive_accept = report.average_error < e_max;

    for (std::uint64_t i = 0; i < records.size(); ++i) {
        if (!records[i].subset || is_test[i]) continue;
        outcome.alice_key.push_back(records[i].alice_bit);
        outcome.bob_key.push_back(records[i].bob_bit);
    }
    report.remaining_key_length = outcome.alice_key.size();
    return outcome;
}

PredictedRates predict_rates(const Amplitudes& amps,
                             const AttackPolicy& policy) {
    const double ab_sq = amps.alpha_sq() * amps.beta_sq();
    const double diff = amps.alpha_sq() - amps.beta_sq();
    const double randomized = 2.0 * ab_sq;               // eve in the other family
    const double cross = 8.0 * ab_sq * diff * diff;      // eve in the twin basis

    PredictedRates rates;
    rates.e1 = rates.e1p = randomized * (policy.p2() + policy.p3());
    rates.e2 = rates.e3p = randomized * policy.p1() + cross * policy.p3();
    rates.e3 = rates.e2p = randomized * policy.p1() + cross * policy.p2();
    return rates;
}

double predict_average(const Amplitudes& amps, const AttackPolicy& policy,
                       double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must be in (0, 1]");
    const PredictedRates r = predict_rates(amps, policy);
    const double one_minus = 1.0 - epsilon;
    const double w_rect = one_minus * one_minus;
    const double w_diag = epsilon * epsilon / 4.0;
    return (w_rect * (r.e1 + r.e1p) + w_diag * (r.e2 + r.e3 + r.e2p + r.e3p)) /
           (2.0 * (w_rect + epsilon * epsilon / 2.0));
}

double sifted_fraction(double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must be in (0, 1]");
    const double one_minus = 1.0 - epsilon;
    return one_minus * one_minus + epsilon * epsilon / 2.0;
}

EpsilonBound epsilon_lower_bound(std::uint64_t n_pairs,
                                 std::uint64_t m_required) {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");
    if (m_required < 1)
        throw std::invalid_argument("m_required must be at least 1");
    const double value = 2.0 * std::sqrt(2.0 * static_cast<double>(m_required) /
                                         static_cast<double>(n_pairs));
    return {value, value <= 1.0};
}

double min_epsilon(std::uint64_t n_pairs, std::uint64_t m_required) {
    const EpsilonBound bound = epsilon_lower_bound(n_pairs, m_required);
    if (!bound.feasible)
        throw Infeasible("no epsilon <= 1 populates the diagonal subsets with " +
                         std::to_string(m_required) + " records at n_pairs = " +
                         std::to_string(n_pairs));
    return bound.value;
}

double concentration_efficiency_bound(const Amplitudes& amps) {
    return 2.0 * std::min(amps.alpha_sq(), amps.beta_sq());
}

SubsetTally tally_subsets(std::span<const PairRecord> records) {
    SubsetTally tally;
    for (const PairRecord& r : records) {
        if (!r.subset) continue;
        const std::size_t s = subset_index(*r.subset);
        const bool mismatch = r.alice_bit != r.bob_bit;
        ++tally.population[s];
        tally.mismatches[s] += mismatch;
        ++tally.sifted;
        tally.sifted_mismatches += mismatch;
    }
    return tally;
}

std::string report_json(const ErrorReport& report) {
    nlohmann::ordered_json j;
    j["epsilon"] = report.epsilon;
    j["e_max"] = report.e_max;
    nlohmann::ordered_json subsets;
    for (SubsetLabel label : kSubsetOrder) {
        const SubsetEstimate& e = report.subsets[subset_index(label)];
        subsets[std::string(to_token(label))] = {
            {"samples", e.sample_size},
            {"mismatches", e.mismatches},
            {"rate", e.rate},
        };
    }
    j["subsets"] = subsets;
    j["average_error"] = report.average_error;
    j["pooled_error"] = report.pooled_error;
    j["refined_decision"] = report.refined_accept ? "accept" : "abort";
    j["naive_decision"] = report.naive_accept ? "accept" : "abort";
    j["remaining_key_length"] = report.remaining_key_length;
    return j.dump(2) + "\n";
}

namespace {

// z-score of an observed frequency against a binomial prediction; an exact
// match is required when the predicted variance vanishes.
double binomial_z(double observed, double predicted, std::uint64_t n) {
    const double sigma =
        std::sqrt(predicted * (1.0 - predicted) / static_cast<double>(n));
    if (sigma == 0.0)
        return observed == predicted
                   ? 0.0
                   : std::numeric_limits<double>::infinity();
    return (observed - predicted) / sigma;
}

}  // namespace

VerifyCell run_verify_cell(const SessionConfig& config, double z_max) {
    config.validate();
    VerifyCell cell;
    cell.alpha_sq = config.alpha_sq;
    cell.policy = config.attack;

    const Amplitudes amps = Amplitudes::from_alpha_sq(config.alpha_sq);
    cell.predicted = predict_rates(amps, config.attack);
    cell.predicted_average = predict_average(amps, config.attack, config.epsilon);

    const SessionResult session = run_session(config);
    cell.tally = tally_subsets(session.records);

    bool ok = true;
    const std::array<double, kSubsetCount> predicted = cell.predicted.as_array();
    for (SubsetLabel label : kSubsetOrder) {
        const std::size_t s = subset_index(label);
        const std::uint64_t pop = cell.tally.population[s];
        if (pop == 0) {
            ok = false;
            cell.failure = "subset " + std::string(to_token(label)) + " is empty";
            continue;
        }
        cell.empirical[s] = static_cast<double>(cell.tally.mismatches[s]) /
                            static_cast<double>(pop);
        cell.z[s] = binomial_z(cell.empirical[s], predicted[s], pop);
        ok = ok && std::abs(cell.z[s]) <= z_max;
    }

    if (cell.tally.sifted > 0) {
        cell.empirical_average =
            static_cast<double>(cell.tally.sifted_mismatches) /
            static_cast<double>(cell.tally.sifted);
        cell.z_average = binomial_z(cell.empirical_average,
                                    cell.predicted_average, cell.tally.sifted);
        ok = ok && std::abs(cell.z_average) <= z_max;
    } else {
        ok = false;
        if (cell.failure.empty()) cell.failure = "no sifted records";
    }

    try {
        Rng sample_rng(config.seed, kSampleStream);
        cell.report = estimate_errors(session.records, config.m_samples,
                                      config.epsilon, config.e_max, sample_rng)
                          .report;
    } catch (const InsufficientSamples& ex) {
        cell.insufficient = true;
        cell.failure = ex.what();
        ok = false;
    }

    cell.pass = ok;
    return cell;
}

}  // namespace qkd
