#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cvverify/random.hpp"

namespace cvverify {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Quadrature ordering is q1,p1,...,qk,pk throughout, with hbar-free units
/// where the vacuum variance of every quadrature is 1/2.

/// Standard symplectic form for the interleaved ordering.
Mat symplectic_form(int modes);

/// Gaussian state of `modes` bosonic modes: mean vector (length 2k) and
/// symmetric covariance matrix (2k x 2k) satisfying the uncertainty
/// relation cov + (i/2)*Omega >= 0.
struct GaussianState {
  int modes = 0;
  Vec mean;
  Mat cov;

  GaussianState() = default;
  GaussianState(int modes_, Vec mean_, Mat cov_);

  void validate() const;
};

/// Affine symplectic map x -> S x + d acting on states.
struct SymplecticOp {
  Mat S;
  Vec d;

  SymplecticOp() = default;
  SymplecticOp(Mat S_, Vec d_);
  explicit SymplecticOp(Mat S_);

  int modes() const { return static_cast<int>(S.rows()) / 2; }
  void validate(double tol = 1e-9) const;
  SymplecticOp inverse() const;
};

/// Gaussian channel: cov -> X cov X^T + Y, mean -> X mean + shift.
struct GaussianChannel {
  Mat X;
  Mat Y;
  Vec shift;

  GaussianChannel() = default;
  GaussianChannel(Mat X_, Mat Y_, Vec shift_);
  GaussianChannel(Mat X_, Mat Y_);

  int modes() const { return static_cast<int>(X.rows()) / 2; }
  void validate(double tol = 1e-9) const;
};

/// Linear combination of quadratures plus a scalar offset.
struct LinearObservable {
  Vec coeffs;
  double offset = 0.0;

  LinearObservable() = default;
  LinearObservable(Vec coeffs_, double offset_ = 0.0);
};

GaussianState make_vacuum(int modes);

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op);

GaussianState apply_channel(const GaussianState& state, const GaussianChannel& ch);

/// Two-mode squeezed vacuum with squeezing parameter kappa. Mode order is
/// (signal, reference); qq correlations are +sinh(2k)/2, pp are negative.
GaussianState two_mode_squeezed(double kappa);

struct Marginal {
  double mean = 0.0;
  double variance = 0.0;
};

Marginal marginal(const GaussianState& state, const LinearObservable& obs);

double sample_homodyne(const GaussianState& state, const LinearObservable& obs,
                       RandomStream& rng);

/// Overlap <psi|rho|psi> for a pure Gaussian target (det(2 cov) = 1) and an
/// arbitrary Gaussian state. Closed form from the Gaussian integral of the
/// two Wigner functions.
double pure_state_fidelity(const GaussianState& target, const GaussianState& actual);

/// Average fidelity of a single-mode channel over coherent inputs with
/// Gaussian-modulated amplitudes (weight lambda) against targets |g alpha>.
double coherent_average_fidelity(const GaussianChannel& ch, double lambda, double g);

// --- constructors for common elements ---

SymplecticOp identity_op(int modes);
/// Single-mode squeezer acting on mode `mode` of `modes`: q -> e^{xi} q,
/// p -> e^{-xi} p on the state (momentum-squeezed vacuum for xi > 0).
SymplecticOp momentum_squeezer(int modes, int mode, double xi);
SymplecticOp phase_rotation_op(int modes, int mode, double theta);
SymplecticOp displacement_op(int modes, const Vec& d);
/// Controlled-phase shear between two modes: p_a -= q_b, p_b -= q_a on the
/// state, so the conjugated observables pick up the +q cross terms.
SymplecticOp cz_shear(int modes, int mode_a, int mode_b);
SymplecticOp compose(const SymplecticOp& second, const SymplecticOp& first);

GaussianState tensor_product(const GaussianState& a, const GaussianState& b);
/// Reorder modes: new mode i is old mode perm[i].
GaussianState permute_modes(const GaussianState& state, const std::vector<int>& perm);

GaussianChannel identity_channel(int modes);
/// Phase-insensitive amplifier with amplitude gain x >= 1 at the quantum
/// limit: X = x I, Y = (x^2-1)/2 I.
GaussianChannel quantum_limited_amplifier(double x);
/// Pure loss with amplitude transmission x <= 1: X = x I, Y = (1-x^2)/2 I.
GaussianChannel pure_loss(double x);
GaussianChannel replace_with_vacuum(int modes);
GaussianChannel channel_from_symplectic(const SymplecticOp& op);
/// Adds isotropic classical noise y to every quadrature.
GaussianChannel add_noise(const GaussianChannel& ch, double y);
GaussianChannel compose_channels(const GaussianChannel& second, const GaussianChannel& first);
/// Channel acting on the first `ch.modes()` modes of a `total`-mode state.
GaussianChannel embed_channel(const GaussianChannel& ch, int total);

/// Optimal Gaussian channel for the coherent-amplification benchmark with
/// modulation lambda and gain g >= lambda+1 (quantum-limited amplifier with
/// amplitude gain g/(lambda+1)).
GaussianChannel optimal_amplifier_channel(double lambda, double g);
/// Optimal channel for attenuation/storage with g <= 1 (pure loss).
GaussianChannel optimal_attenuator_channel(double g);

}  // namespace cvverify
