#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "cvverify/phasespace.hpp"
#include "cvverify/random.hpp"

namespace cvverify {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Hard cap on the truncated Hilbert-space dimension D^modes.
inline constexpr long kMaxFockDimension = 20000;

/// Truncated Fock-space state: pure amplitudes or a density matrix over
/// per-mode levels 0..cutoff-1. Mode 1 is the most significant index, so a
/// basis state |n1,...,nk> sits at n1*D^(k-1) + ... + nk. `leakage` is an
/// upper bound on the population that the truncation may have clipped.
struct FockArray {
  int modes = 0;
  int cutoff = 0;
  CVec amplitudes;   // pure representation (empty when mixed)
  CMat density;      // mixed representation (0x0 when pure)
  double leakage = 0.0;

  bool is_pure() const { return amplitudes.size() > 0; }
  long dim() const;
  void validate() const;

  static FockArray pure(int modes, int cutoff, CVec amplitudes, double leakage = 0.0);
  static FockArray mixed(int modes, int cutoff, CMat density, double leakage = 0.0);
  static FockArray basis_state(int modes, int cutoff, const std::vector<int>& levels);
};

enum class QuadKind { Q, P };

/// Real-coefficient polynomial in quadrature operators. Every factor in a
/// term must commute with the others, which restricts a term to at most one
/// p-type factor per mode and forbids mixing q and p on the same mode.
struct PolynomialObservable {
  struct Factor {
    int mode = 0;  // 1-based
    QuadKind kind = QuadKind::Q;
    int power = 1;
  };
  struct Term {
    double coefficient = 0.0;
    std::vector<Factor> factors;  // empty product = identity
  };
  std::vector<Term> terms;
};

/// Annihilation operator with <n-1|a|n> = sqrt(n).
Eigen::MatrixXd ladder(int cutoff);
CMat q_matrix(int cutoff);
CMat p_matrix(int cutoff);
CMat number_matrix(int cutoff);
/// Lifts a single-mode operator to mode `mode` (1-based) of `modes`.
CMat embed_single_mode(const CMat& op, int modes, int mode, int cutoff);

CMat build_observable(const PolynomialObservable& spec, int modes, int cutoff);

/// Projective sampler for a Hermitian observable. The eigendecomposition is
/// computed once on first use and shared afterwards.
class ObservableSampler {
 public:
  explicit ObservableSampler(CMat observable);
  double sample(const FockArray& state, RandomStream& rng) const;
  const Eigen::VectorXd& eigenvalues() const;

 private:
  void ensure_decomposed() const;
  CMat op_;
  mutable std::unique_ptr<Eigen::SelfAdjointEigenSolver<CMat>> eig_;
  mutable std::once_flag once_;
};

double born_sample(const FockArray& state, const CMat& observable, RandomStream& rng);

double expectation(const FockArray& state, const CMat& observable);

/// Streams the polynomial term by term through per-mode applications, so
/// no dense joint matrix is ever built.
double expectation(const FockArray& state, const PolynomialObservable& spec);

/// First and symmetrized second quadrature moments: mean_i = <x_i>,
/// second(i,j) = <x_i x_j + x_j x_i>/2 for the interleaved ordering.
struct QuadratureMoments {
  Vec mean;
  Mat second;
};
QuadratureMoments quadrature_moments(const FockArray& state);

/// |<a|b>|^2 for pure/pure, <b|rho_a|b> when a is mixed and b pure.
double fidelity(const FockArray& a, const FockArray& b);

/// Momentum-squeezed vacuum amplitudes (even levels only), Var(p) = e^{-2xi}/2.
CVec squeezed_vacuum_amplitudes(double xi, int cutoff);
CVec coherent_amplitudes(std::complex<double> alpha, int cutoff);

/// Hypergraph state: per-mode momentum squeezers followed by one
/// generalized controlled-phase exponential per edge. Vertices are 1-based.
FockArray hypergraph_state(const std::vector<std::vector<int>>& edges, double xi,
                           int modes, int cutoff, double leakage_budget = 1e-4);

/// Fock representation of a supported pure Gaussian family: vacuum,
/// coherent (single mode), squeezed vacuum (single mode, diagonal
/// covariance), two-mode squeezed vacuum.
FockArray gaussian_to_fock(const GaussianState& state, int cutoff);

/// Applies exp(-i * prod_{l in e} q_l) to pure amplitudes via the
/// position-product eigenbasis of the commuting truncated quadratures.
void apply_cz_exponential(FockArray& state, const std::vector<int>& edge, double sign = -1.0);

/// Single-mode squeezer exp(xi/2 (adag^2 - a^2)) as a Fock matrix; exactly
/// norm-preserving in the truncated space.
CMat squeezer_matrix(double xi, int cutoff);

/// Applies a single-mode operator to mode `mode` (1-based) of a pure state.
void apply_single_mode(FockArray& state, const CMat& op, int mode);

/// Samples the linear quadrature combination sum_i c_i x_i + offset on a
/// pure Fock state by rotating each involved mode into its position basis.
/// Exact Born sampling of the (commuting-by-mode) joint homodyne outcome.
double sample_linear_on_fock(const FockArray& state, const LinearObservable& obs,
                             RandomStream& rng);

/// Eigenbasis of the truncated single-mode q operator (cached per cutoff):
/// q = V diag(nodes) V^T with V real orthogonal.
struct QuadratureBasis {
  Eigen::VectorXd nodes;
  Eigen::MatrixXd V;
};
const QuadratureBasis& quadrature_basis(int cutoff);

}  // namespace cvverify
