#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkd/adversary.hpp"
#include "qkd/quantum.hpp"
#include "qkd/rng.hpp"
#include "qkd/session.hpp"

namespace qkd {

/// Stream id used to sample test bits; fixed so that the estimation step is
/// reproducible from the session seed alone.
inline constexpr std::uint64_t kSampleStream = 0x455354494D415445ULL;

struct SubsetEstimate {
    std::uint64_t sample_size = 0;
    std::uint64_t mismatches = 0;
    double rate = 0.0;
};

/**
 * Result of the per-subset error estimation. refined_accept demands every
 * one of the six rates below e_max; naive_accept looks only at the
 * population-weighted average, which is what a single pooled estimate over
 * the whole sifted key would converge to.
 */
struct ErrorReport {
    std::array<SubsetEstimate, kSubsetCount> subsets{};
    double epsilon = 0.0;
    double e_max = 0.0;
    double average_error = 0.0;  // population-weighted combination
    double pooled_error = 0.0;   // total mismatches / total samples
    bool refined_accept = false;
    bool naive_accept = false;
    std::uint64_t remaining_key_length = 0;
};

/// Closed-form error rates; the primed subsets share the formulas of their
/// unprimed twins (e1 = e1p, e2 = e3p, e3 = e2p).
struct PredictedRates {
    double e1 = 0.0;
    double e1p = 0.0;
    double e2 = 0.0;
    double e2p = 0.0;
    double e3 = 0.0;
    double e3p = 0.0;

    std::array<double, kSubsetCount> as_array() const {
        return {e1, e1p, e2, e2p, e3, e3p};
    }
};

class InsufficientSamples : public std::runtime_error {
  public:
    InsufficientSamples(SubsetLabel subset, std::uint64_t have,
                        std::uint64_t need);
    SubsetLabel subset() const { return subset_; }

  private:
    SubsetLabel subset_;
};

class Infeasible : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimateOutcome {
    ErrorReport report;
    // Sifted key bits left after the test samples are removed, in trial order.
    std::vector<std::uint8_t> alice_key;
    std::vector<std::uint8_t> bob_key;
};

/**
 * Draw m_samples[i] sifted records per subset without replacement, count the
 * publicly compared mismatches, and strip the sampled records from the key
 * material. Throws InsufficientSamples when a subset is too small, which
 * signals that epsilon or the pair count was chosen too low.
 */
EstimateOutcome estimate_errors(
    std::span<const PairRecord> records,
    const std::array<std::uint64_t, kSubsetCount>& m_samples, double epsilon,
    double e_max, Rng& rng);

/**
 * Closed-form subset error rates for a biased intercept-resend attack.
 * With A = 2 a^2 b^2 and B = 8 a^2 b^2 (a^2 - b^2)^2:
 *   e1 = e1p = A (p2 + p3)
 *   e2 = e3p = A p1 + B p3
 *   e3 = e2p = A p1 + B p2
 * The rates depend on the attack and the source entanglement only, not on
 * the basis bias epsilon.
 */
PredictedRates predict_rates(const Amplitudes& amps, const AttackPolicy& policy);

/// Population-weighted average of the six predicted rates:
/// [(1-eps)^2 (e1+e1p) + (eps^2/4)(e2+e3+e2p+e3p)] / (2 [(1-eps)^2 + eps^2/2]).
double predict_average(const Amplitudes& amps, const AttackPolicy& policy,
                       double epsilon);

/// Probability that a trial survives sifting: (1-eps)^2 + eps^2/2.
double sifted_fraction(double epsilon);

struct EpsilonBound {
    double value = 0.0;
    bool feasible = false;  // value <= 1
};

/// Smallest epsilon for which the expected diagonal-subset population
/// n_pairs * eps^2 / 8 reaches m_required: 2 sqrt(2 m / N).
EpsilonBound epsilon_lower_bound(std::uint64_t n_pairs,
                                 std::uint64_t m_required);

/// Same bound, throwing Infeasible when no epsilon <= 1 works at this N.
double min_epsilon(std::uint64_t n_pairs, std::uint64_t m_required);

/// Ceiling on the efficiency of the alternative route that first
/// concentrates the source into maximally entangled pairs: 2 min(a^2, b^2).
double concentration_efficiency_bound(const Amplitudes& amps);

/// Per-subset populations and mismatch counts over all sifted records.
struct SubsetTally {
    std::array<std::uint64_t, kSubsetCount> population{};
    std::array<std::uint64_t, kSubsetCount> mismatches{};
    std::uint64_t sifted = 0;
    std::uint64_t sifted_mismatches = 0;
};

SubsetTally tally_subsets(std::span<const PairRecord> records);

/// Fixed-field JSON rendering of a report; ends with a newline.
std::string report_json(const ErrorReport& report);

/**
 * Monte Carlo vs closed-form comparison for one (alpha_sq, attack) cell:
 * runs a session, derives full-subset empirical rates and the pooled sifted
 * mismatch average, and scores each against the predictions in binomial
 * standard deviations. Also runs the sampling-based estimation so that an
 * undersized subset surfaces as a cell failure.
 */
struct VerifyCell {
    double alpha_sq = 0.0;
    AttackPolicy policy = AttackPolicy::passive();
    PredictedRates predicted{};
    double predicted_average = 0.0;
    SubsetTally tally{};
    std::array<double, kSubsetCount> empirical{};
    std::array<double, kSubsetCount> z{};
    double empirical_average = 0.0;
    double z_average = 0.0;
    std::optional<ErrorReport> report;
    bool insufficient = false;
    std::string failure;
    bool pass = false;
};

VerifyCell run_verify_cell(const SessionConfig& config, double z_max);

}  // namespace qkd
