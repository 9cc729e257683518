#include "qkd/adversary.hpp"

#include <stdexcept>

namespace qkd {

AttackPolicy::AttackPolicy(double p1, double p2, double p3)
    : p1_(p1), p2_(p2), p3_(p3) {
    for (double p : {p1, p2, p3})
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument(
                "attack: each probability must be in [0, 1]");
    if (p1 + p2 + p3 > 1.0 + kUnitTolerance)
        throw std::invalid_argument("attack: p1 + p2 + p3 must not exceed 1");
}

std::string_view to_token(EveActionTag tag) {
    switch (tag) {
        case EveActionTag::MeasuredRect: return "measured_rect";
        case EveActionTag::MeasuredPlus: return "measured_plus";
        case EveActionTag::MeasuredMinus: return "measured_minus";
        case EveActionTag::Passive: return "passive";
    }
    return "?";
}

std::pair<QubitState, EveAction> eve_intercept(const QubitState& photon,
                                               const AttackPolicy& policy,
                                               const Amplitudes& amps,
                                               Rng& rng) {
    const double u = rng.next_unit();
    BasisTag basis_tag;
    EveActionTag action_tag;
    if (u < policy.p1()) {
        basis_tag = BasisTag::Rect;
        action_tag = EveActionTag::MeasuredRect;
    } else if (u < policy.p1() + policy.p2()) {
        basis_tag = BasisTag::PlusTheta;
        action_tag = EveActionTag::MeasuredPlus;
    } else if (u < policy.p1() + policy.p2() + policy.p3()) {
        basis_tag = BasisTag::MinusTheta;
        action_tag = EveActionTag::MeasuredMinus;
    } else {
        return {photon, EveAction{}};
    }
    auto [bit, collapsed] = measure_qubit(photon, basis_for(basis_tag, amps), rng);
    return {collapsed,
            EveAction{action_tag, static_cast<std::uint8_t>(bit)}};
}

}  // namespace qkd
