#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>

#include "qkd/quantum.hpp"
#include "qkd/rng.hpp"

namespace qkd {

/**
 * Eve's per-photon strategy: measure the in-flight photon in the
 * rectilinear, +theta or -theta basis with probabilities p1, p2, p3
 * respectively, and otherwise let it pass untouched. The same policy applies
 * independently to every photon of a session.
 */
class AttackPolicy {
  public:
    AttackPolicy(double p1, double p2, double p3);
    static AttackPolicy passive() { return {0.0, 0.0, 0.0}; }

    double p1() const { return p1_; }
    double p2() const { return p2_; }
    double p3() const { return p3_; }
    double passive_prob() const {
        const double rest = 1.0 - p1_ - p2_ - p3_;
        return rest > 0.0 ? rest : 0.0;
    }

  private:
    double p1_;
    double p2_;
    double p3_;
};

enum class EveActionTag : std::uint8_t {
    MeasuredRect,
    MeasuredPlus,
    MeasuredMinus,
    Passive,
};

std::string_view to_token(EveActionTag tag);

struct EveAction {
    EveActionTag tag = EveActionTag::Passive;
    std::optional<std::uint8_t> observed_bit;  // present iff tag != Passive

    bool operator==(const EveAction&) const = default;
};

/**
 * Intercept-resend step. Picks one of the three bases (or the passive
 * branch) per the policy, measures the photon and forwards the collapsed
 * eigenstate; the passive branch forwards the input unchanged. The observed
 * bit is recorded for diagnostics only; no protocol decision reads it.
 */
std::pair<QubitState, EveAction> eve_intercept(const QubitState& photon,
                                               const AttackPolicy& policy,
                                               const Amplitudes& amps,
                                               Rng& rng);

}  // namespace qkd
