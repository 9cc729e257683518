#include "qkd/quantum.hpp"

#include <cmath>
#include <stdexcept>

namespace qkd {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

int sample_bit(double prob0, Rng& rng) {
    if (prob0 >= 1.0 - kUnitTolerance) return 0;
    if (prob0 <= kUnitTolerance) return 1;
    return rng.next_unit() < prob0 ? 0 : 1;
}

struct RawProjection {
    double prob;
    double rem_h;
    double rem_v;
};

RawProjection raw_project_first(const PairState& pair, const MeasBasis& basis,
                                int bit) {
    const QubitState& e = basis.eigenstate(bit);
    const double rem_h = e.h() * pair.hh() + e.v() * pair.vh();
    const double rem_v = e.h() * pair.hv() + e.v() * pair.vv();
    double prob = rem_h * rem_h + rem_v * rem_v;
    if (prob > 1.0) prob = 1.0;
    return {prob, rem_h, rem_v};
}

}  // namespace

Amplitudes::Amplitudes(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw std::invalid_argument("amplitudes must be nonnegative");
    if (std::abs(alpha * alpha + beta * beta - 1.0) > kUnitTolerance)
        throw std::invalid_argument(
            "amplitudes must satisfy alpha^2 + beta^2 = 1");
}

Amplitudes Amplitudes::from_alpha_sq(double alpha_sq) {
    if (!(alpha_sq >= 0.0 && alpha_sq <= 1.0))
        throw std::invalid_argument("alpha_sq must be in [0, 1]");
    return {std::sqrt(alpha_sq), std::sqrt(1.0 - alpha_sq)};
}

QubitState::QubitState(double h, double v) : h_(h), v_(v) {
    if (std::abs(h * h + v * v - 1.0) > kUnitTolerance)
        throw std::invalid_argument("qubit state must have unit norm");
}

QubitState QubitState::normalized(double h, double v) {
    const double norm_sq = h * h + v * v;
    if (!(norm_sq > 0.0))
        throw std::invalid_argument("cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    return {h * inv, v * inv};
}

PairState::PairState(double hh, double hv, double vh, double vv)
    : c_{hh, hv, vh, vv} {
    const double norm_sq = hh * hh + hv * hv + vh * vh + vv * vv;
    if (std::abs(norm_sq - 1.0) > kUnitTolerance)
        throw std::invalid_argument("pair state must have unit norm");
}

MeasBasis::MeasBasis(BasisTag tag, QubitState bit0, QubitState bit1)
    : tag_(tag), bit0_(bit0), bit1_(bit1) {
    if (std::abs(bit0.dot(bit1)) > kUnitTolerance)
        throw std::invalid_argument("basis eigenstates must be orthogonal");
}

std::string_view to_token(BasisTag tag) {
    switch (tag) {
        case BasisTag::Rect: return "rect";
        case BasisTag::Diag: return "diag";
        case BasisTag::PlusTheta: return "plus_theta";
        case BasisTag::MinusTheta: return "minus_theta";
    }
    return "?";
}

std::string_view to_token(SourceChoice source) {
    return source == SourceChoice::Plain ? "plain" : "primed";
}

MeasBasis basis_for(BasisTag tag, const Amplitudes& amps) {
    const double a = amps.alpha();
    const double b = amps.beta();
    switch (tag) {
        case BasisTag::Rect:
            return {tag, QubitState(1.0, 0.0), QubitState(0.0, 1.0)};
        case BasisTag::Diag:
            return {tag, QubitState(kInvSqrt2, kInvSqrt2),
                    QubitState(kInvSqrt2, -kInvSqrt2)};
        case BasisTag::PlusTheta:
            return {tag, QubitState(a, b), QubitState(b, -a)};
        case BasisTag::MinusTheta:
            return {tag, QubitState(b, a), QubitState(a, -b)};
    }
    throw std::invalid_argument("unknown basis tag");
}

PairState make_pair_state(const Amplitudes& amps, SourceChoice source) {
    if (source == SourceChoice::Plain)
        return {amps.alpha(), 0.0, 0.0, amps.beta()};
    return {amps.beta(), 0.0, 0.0, amps.alpha()};
}

double overlap_prob(const QubitState& a, const QubitState& b) {
    const double d = a.dot(b);
    const double p = d * d;
    return p > 1.0 ? 1.0 : p;
}

Projection project_first(const PairState& pair, const MeasBasis& basis,
                         int bit) {
    if (bit != 0 && bit != 1)
        throw std::invalid_argument("bit must be 0 or 1");
    const RawProjection raw = raw_project_first(pair, basis, bit);
    if (raw.prob <= kUnitTolerance) return {raw.prob, std::nullopt};
    return {raw.prob, QubitState::normalized(raw.rem_h, raw.rem_v)};
}

std::pair<int, QubitState> measure_pair_first(const PairState& pair,
                                              const MeasBasis& basis,
                                              Rng& rng) {
    const RawProjection first = raw_project_first(pair, basis, 0);
    const int bit = sample_bit(first.prob, rng);
    const RawProjection chosen =
        bit == 0 ? first : raw_project_first(pair, basis, 1);
    return {bit, QubitState::normalized(chosen.rem_h, chosen.rem_v)};
}

std::pair<int, QubitState> measure_qubit(const QubitState& state,
                                         const MeasBasis& basis, Rng& rng) {
    const int bit = sample_bit(overlap_prob(state, basis.bit0_state()), rng);
    return {bit, basis.eigenstate(bit)};
}

}  // namespace qkd
