#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvverify/fock.hpp"
#include "cvverify/phasespace.hpp"

namespace cvverify {

enum class Branch { Q, P };

/// Targets for state verification. A Gaussian target is U_{S,d}|0...0>
/// described by its affine state action; a hypergraph target is the
/// controlled-phase circuit on momentum-squeezed vacua.
struct GaussianTarget {
  SymplecticOp op;
  int modes() const { return op.modes(); }
};

struct HypergraphTarget {
  int modes = 0;
  double xi = 0.0;
  std::vector<std::vector<int>> edges;
  int cutoff = 0;  // Fock truncation used when a Fock path is needed
};

using TargetSpec = std::variant<GaussianTarget, HypergraphTarget>;

int target_modes(const TargetSpec& target);

/// The measured observable for group j, phase theta and branch. Gaussian
/// targets yield a linear form; hypergraph targets a quadrature polynomial.
using MeasuredObservable = std::variant<LinearObservable, PolynomialObservable>;

/// Rotated conjugated quadrature cos(t) q~_j + sin(t) p~_j, with the P
/// branch realized as the Q branch at theta + pi/2.
MeasuredObservable observable_for_target(const TargetSpec& target, int j, double theta,
                                         Branch branch);

struct WitnessEstimate {
  double value = 0.0;
  double threshold = 0.0;
  std::int64_t samples_used = 0;
  bool pass = false;
};

/// W* = 1 + k/2 - k mean(chi^2) against the threshold 1 - eps/(2m).
WitnessEstimate state_witness(const std::vector<double>& chi, int k, std::int64_t m,
                              double epsilon);

enum class WitnessTag {
  gaussian_state,
  hypergraph_state,
  amplifier,
  attenuator_or_storage,
  purifier_high_gain,
  purifier_low_gain,
  memory_multimode,
  cz_gate,
};

std::string to_string(WitnessTag tag);

/// Target family plus its parameters. Channel kinds carry the input
/// modulation lambda, the gain g, the purifier noise mu, the memory/cz
/// target unitary, and the cz quadrature transformation T.
struct WitnessKind {
  WitnessTag tag = WitnessTag::gaussian_state;
  double lambda = 1.0;
  double g = 1.0;
  double mu = 1.0;
  int k = 1;
  std::optional<SymplecticOp> target_op;  // gaussian_state / memory / cz
  std::optional<HypergraphTarget> hypergraph;
  std::optional<Mat> T;  // cz gate quadrature map (p_i -> p_i + prod q)

  void validate() const;
  bool is_channel_kind() const;
};

/// Picks the purifier regime from (lambda, g, mu); throws on the boundary
/// where the probe squeezing diverges.
WitnessTag purifier_regime(double lambda, double g, double mu);

/// Normalization in front of the channel witness and its threshold:
/// (lambda+1)/g^2 for the amplifier, the purifier factor in the high-gain
/// regime, 1 otherwise.
double fbar_norm(const WitnessKind& kind);

/// Channel witness estimate from the per-use outcomes chi.
WitnessEstimate channel_witness(const WitnessKind& kind, const std::vector<double>& chi,
                                std::int64_t m, double epsilon);

/// Everything the verifier needs to probe one channel use: the 2k-mode
/// entangled input (first k modes go through the channel), the joint
/// observable family on (output, reference), and the law of the classical
/// offset added by the purifier probes.
struct ProbeSpec {
  GaussianState input;
  int k = 1;
  double probe_kappa = 0.0;     // squeezing of the entangled input
  double observable_kappa = 0.0;  // squeezing inside the measured combination
  double xi_offset_variance = 0.0;  // purifier classical offset (0 = none)
  std::string randomizer;
  /// Joint linear observable on 4k quadratures (output block first).
  std::function<LinearObservable(int j, double theta, Branch branch)> observable;
  /// Coefficient multiplying the classical offset for a given setting.
  std::function<double(int j, double theta, Branch branch)> offset_coefficient;
};

ProbeSpec probe_spec(const WitnessKind& kind);

/// Exact witness expectation for a representable prover.
/// For states: 1 + k/2 - k E[chi^2] with the second moments taken from the
/// phase-space or Fock representation. Equals the fidelity lower bound
/// tr(W rho).
double witness_expectation_oracle(const TargetSpec& target, const GaussianState& prover);
double witness_expectation_oracle(const TargetSpec& target, const FockArray& prover);
/// For channels: fbar_norm * (1 - c * (E[chi^2] - 1/2)) with E[chi^2]
/// evaluated on (E x I)(probe input) including the classical offset.
double witness_expectation_oracle(const WitnessKind& kind, const GaussianChannel& prover);

/// Mean of chi^2 over uniformly random (j, theta, branch) for a Gaussian
/// state measured with the target's conjugated quadratures.
double mean_chi_squared(const TargetSpec& target, const GaussianState& prover);
double mean_chi_squared(const TargetSpec& target, const FockArray& prover);

}  // namespace cvverify
