#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>

#include "qkd/rng.hpp"

namespace qkd {

/// Tolerance for normalization, orthogonality and outcome-probability
/// snapping.
inline constexpr double kUnitTolerance = 1e-12;

/**
 * Schmidt coefficients (alpha, beta) of the photon-pair source.
 *
 * Both components are real and nonnegative with alpha^2 + beta^2 = 1; the
 * source states and the rotated measurement bases are all built from this
 * pair. Degenerate values (alpha = 0 or beta = 0) are legal: they produce a
 * product-state source whose insecurity is observable in simulation rather
 * than rejected up front.
 */
class Amplitudes {
  public:
    Amplitudes(double alpha, double beta);
    static Amplitudes from_alpha_sq(double alpha_sq);

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double alpha_sq() const { return alpha_ * alpha_; }
    double beta_sq() const { return beta_ * beta_; }

    /// (beta, alpha); exchanging the coefficients maps one source state onto
    /// the other.
    Amplitudes swapped() const { return {beta_, alpha_}; }

  private:
    double alpha_;
    double beta_;
};

/// Real single-photon polarization state, coordinates in the {H, V} basis.
class QubitState {
  public:
    QubitState(double h, double v);  // must already have unit norm
    static QubitState normalized(double h, double v);

    double h() const { return h_; }
    double v() const { return v_; }

    double dot(const QubitState& other) const {
        return h_ * other.h_ + v_ * other.v_;
    }

  private:
    double h_;
    double v_;
};

/**
 * Real two-photon state, coordinates over the ordered product basis
 * {HH, HV, VH, VV}. Protocol sources populate only the HH and VV slots.
 */
class PairState {
  public:
    PairState(double hh, double hv, double vh, double vv);

    double hh() const { return c_[0]; }
    double hv() const { return c_[1]; }
    double vh() const { return c_[2]; }
    double vv() const { return c_[3]; }

  private:
    double c_[4];
};

enum class BasisTag : std::uint8_t { Rect, Diag, PlusTheta, MinusTheta };
enum class SourceChoice : std::uint8_t { Plain, Primed };

std::string_view to_token(BasisTag tag);
std::string_view to_token(SourceChoice source);

/**
 * A polarization measurement basis as an explicit orthonormal pair of
 * eigenstates: outcome bit 0 corresponds to bit0_state, bit 1 to bit1_state.
 *
 * Bases are stored as eigenstate pairs rather than rotation angles, which
 * keeps the degenerate sources (alpha or beta zero) free of trig
 * singularities.
 */
class MeasBasis {
  public:
    MeasBasis(BasisTag tag, QubitState bit0, QubitState bit1);

    BasisTag tag() const { return tag_; }
    const QubitState& bit0_state() const { return bit0_; }
    const QubitState& bit1_state() const { return bit1_; }
    const QubitState& eigenstate(int bit) const {
        return bit == 0 ? bit0_ : bit1_;
    }

  private:
    BasisTag tag_;
    QubitState bit0_;
    QubitState bit1_;
};

/**
 * Eigenstate table:
 *   Rect       {H, V}
 *   Diag       {(H+V)/sqrt2, (H-V)/sqrt2}
 *   PlusTheta  {aH+bV, bH-aV}
 *   MinusTheta {bH+aV, aH-bV}
 * Rect and Diag do not depend on the amplitudes.
 */
MeasBasis basis_for(BasisTag tag, const Amplitudes& amps);

/// Plain -> (a, 0, 0, b); Primed -> (b, 0, 0, a) over {HH, HV, VH, VV}.
PairState make_pair_state(const Amplitudes& amps, SourceChoice source);

/// Squared inner product of two unit states, clamped to [0, 1].
double overlap_prob(const QubitState& a, const QubitState& b);

/// Outcome probability and normalized leftover state of the second qubit
/// after projecting the first qubit of `pair` onto the given basis outcome.
/// `remaining` is absent when the outcome probability is below tolerance.
struct Projection {
    double prob = 0.0;
    std::optional<QubitState> remaining;
};

Projection project_first(const PairState& pair, const MeasBasis& basis, int bit);

/**
 * Measure the first qubit of a two-photon state. Returns the sampled bit and
 * the normalized post-measurement state of the second qubit. Probabilities
 * within tolerance of 0 or 1 are treated as certain, so measuring a state
 * that is (up to rounding) an eigenstate never misfires.
 */
std::pair<int, QubitState> measure_pair_first(const PairState& pair,
                                              const MeasBasis& basis,
                                              Rng& rng);

/// Measure a single photon; the collapsed state is the chosen eigenstate.
std::pair<int, QubitState> measure_qubit(const QubitState& state,
                                         const MeasBasis& basis,
                                         Rng& rng);

}  // namespace qkd
