#include "cvverify/witness.hpp"

#include <cmath>
#include <stdexcept>

namespace cvverify {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

double arctanh_checked(double x, const char* what) {
  if (!(x > 0.0) || !(x < 1.0)) {
    throw std::domain_error(std::string(what) + ": argument " + std::to_string(x) +
                            " outside (0, 1), probe squeezing undefined");
  }
  return std::atanh(x);
}

double purifier_p(double lambda, double mu) {
  return (lambda + mu) * (lambda + mu + lambda * mu);
}

/// Shared witness-value formula: value = fbar_norm * (1 - c * mean_dev)
/// with the kind-specific slope c.
double witness_slope(const WitnessKind& kind) {
  const double l = kind.lambda;
  const double g = kind.g;
  switch (kind.tag) {
    case WitnessTag::amplifier:
      return (g * g - l - 1.0) / (g * g);
    case WitnessTag::attenuator_or_storage:
      return (l + 1.0 - g * g) / (l + 1.0);
    case WitnessTag::purifier_high_gain: {
      const double p = purifier_p(l, kind.mu);
      const double gm2 = g * g * kind.mu * kind.mu;
      return (gm2 - p) / gm2;
    }
    case WitnessTag::purifier_low_gain: {
      const double p = purifier_p(l, kind.mu);
      return 1.0 - g * g * kind.mu * kind.mu / p;
    }
    case WitnessTag::memory_multimode:
    case WitnessTag::cz_gate:
      return (l / (l + 1.0)) * static_cast<double>(kind.k);
    default:
      throw std::invalid_argument("witness_slope: not a channel kind");
  }
}

double witness_value_from_mean(const WitnessKind& kind, double mean_chi2) {
  return fbar_norm(kind) * (1.0 - witness_slope(kind) * (mean_chi2 - 0.5));
}

Mat default_cz_T(int k) {
  if (k != 2) {
    throw std::invalid_argument(
        "cz_gate: only the two-mode gate has a linear quadrature map; supply T "
        "explicitly otherwise");
  }
  Mat T = Mat::Identity(4, 4);
  T(1, 2) = 1.0;  // p1 picks up q2
  T(3, 0) = 1.0;  // p2 picks up q1
  return T;
}

}  // namespace

int target_modes(const TargetSpec& target) {
  if (const auto* g = std::get_if<GaussianTarget>(&target)) {
    return g->modes();
  }
  return std::get<HypergraphTarget>(target).modes;
}

MeasuredObservable observable_for_target(const TargetSpec& target, int j, double theta,
                                         Branch branch) {
  const int k = target_modes(target);
  if (j < 1 || j > k) {
    throw std::invalid_argument("observable_for_target: group index out of range");
  }
  const double tp = theta + (branch == Branch::P ? kHalfPi : 0.0);
  const double c = std::cos(tp);
  const double s = std::sin(tp);
  if (const auto* g = std::get_if<GaussianTarget>(&target)) {
    const SymplecticOp inv = g->op.inverse();
    const Vec rowq = inv.S.row(2 * (j - 1));
    const Vec rowp = inv.S.row(2 * (j - 1) + 1);
    Vec coeffs = c * rowq + s * rowp;
    const double offset = c * inv.d(2 * (j - 1)) + s * inv.d(2 * (j - 1) + 1);
    return LinearObservable(std::move(coeffs), offset);
  }
  const auto& h = std::get<HypergraphTarget>(target);
  PolynomialObservable poly;
  poly.terms.push_back({c * std::exp(-h.xi), {{j, QuadKind::Q, 1}}});
  poly.terms.push_back({s * std::exp(h.xi), {{j, QuadKind::P, 1}}});
  for (const auto& edge : h.edges) {
    if (std::find(edge.begin(), edge.end(), j) == edge.end()) continue;
    PolynomialObservable::Term term;
    term.coefficient = s * std::exp(h.xi);
    for (int v : edge) {
      if (v != j) term.factors.push_back({v, QuadKind::Q, 1});
    }
    poly.terms.push_back(std::move(term));
  }
  return poly;
}

WitnessEstimate state_witness(const std::vector<double>& chi, int k, std::int64_t m,
                              double epsilon) {
  if (chi.empty()) {
    throw std::invalid_argument("state_witness: no samples");
  }
  if (m < 1 || k < 1 || !(epsilon > 0.0)) {
    throw std::invalid_argument("state_witness: invalid parameters");
  }
  double sum = 0.0;
  for (double x : chi) sum += x * x;
  WitnessEstimate est;
  est.samples_used = static_cast<std::int64_t>(chi.size());
  est.value = 1.0 + 0.5 * k - static_cast<double>(k) / chi.size() * sum;
  est.threshold = 1.0 - epsilon / (2.0 * static_cast<double>(m));
  est.pass = est.value >= est.threshold;
  return est;
}

std::string to_string(WitnessTag tag) {
  switch (tag) {
    case WitnessTag::gaussian_state: return "gaussian_state";
    case WitnessTag::hypergraph_state: return "hypergraph_state";
    case WitnessTag::amplifier: return "amplifier";
    case WitnessTag::attenuator_or_storage: return "attenuator_or_storage";
    case WitnessTag::purifier_high_gain: return "purifier_high_gain";
    case WitnessTag::purifier_low_gain: return "purifier_low_gain";
    case WitnessTag::memory_multimode: return "memory_multimode";
    case WitnessTag::cz_gate: return "cz_gate";
  }
  return "?";
}

bool WitnessKind::is_channel_kind() const {
  return tag != WitnessTag::gaussian_state && tag != WitnessTag::hypergraph_state;
}

WitnessTag purifier_regime(double lambda, double g, double mu) {
  const double boundary = std::sqrt(purifier_p(lambda, mu)) / mu;
  if (g > boundary) return WitnessTag::purifier_high_gain;
  if (g < boundary) return WitnessTag::purifier_low_gain;
  throw std::domain_error("purifier_regime: g sits exactly on the regime boundary");
}

void WitnessKind::validate() const {
  if (!(lambda > 0.0) || !(g > 0.0) || !(mu > 0.0) || k < 1) {
    throw std::invalid_argument("WitnessKind: parameters must be positive");
  }
  switch (tag) {
    case WitnessTag::amplifier:
      if (!(g > std::sqrt(lambda + 1.0))) {
        throw std::domain_error("WitnessKind: amplifier requires g > sqrt(lambda+1)");
      }
      break;
    case WitnessTag::attenuator_or_storage:
      if (!(g < std::sqrt(lambda + 1.0))) {
        throw std::domain_error(
            "WitnessKind: attenuation/storage requires g < sqrt(lambda+1)");
      }
      break;
    case WitnessTag::purifier_high_gain:
      if (purifier_regime(lambda, g, mu) != WitnessTag::purifier_high_gain) {
        throw std::domain_error("WitnessKind: purifier gain is not in the high regime");
      }
      break;
    case WitnessTag::purifier_low_gain:
      if (purifier_regime(lambda, g, mu) != WitnessTag::purifier_low_gain) {
        throw std::domain_error("WitnessKind: purifier gain is not in the low regime");
      }
      break;
    case WitnessTag::cz_gate:
      if (!T && k != 2) {
        throw std::invalid_argument("WitnessKind: cz_gate beyond two modes needs T");
      }
      break;
    default:
      break;
  }
}

double fbar_norm(const WitnessKind& kind) {
  switch (kind.tag) {
    case WitnessTag::amplifier:
      return (kind.lambda + 1.0) / (kind.g * kind.g);
    case WitnessTag::purifier_high_gain:
      return purifier_p(kind.lambda, kind.mu) / (kind.g * kind.g * kind.mu * kind.mu);
    default:
      return 1.0;
  }
}

WitnessEstimate channel_witness(const WitnessKind& kind, const std::vector<double>& chi,
                                std::int64_t m, double epsilon) {
  kind.validate();
  if (!kind.is_channel_kind()) {
    throw std::invalid_argument("channel_witness: state kinds use state_witness");
  }
  if (chi.empty()) {
    throw std::invalid_argument("channel_witness: no samples");
  }
  if (m < 1 || !(epsilon > 0.0)) {
    throw std::invalid_argument("channel_witness: invalid parameters");
  }
  double sum = 0.0;
  for (double x : chi) sum += x * x;
  const double mean_chi2 = sum / chi.size();
  WitnessEstimate est;
  est.samples_used = static_cast<std::int64_t>(chi.size());
  est.value = witness_value_from_mean(kind, mean_chi2);
  est.threshold = fbar_norm(kind) * (1.0 - epsilon / (2.0 * static_cast<double>(m)));
  est.pass = est.value >= est.threshold;
  return est;
}

ProbeSpec probe_spec(const WitnessKind& kind) {
  kind.validate();
  const double l = kind.lambda;
  const double g = kind.g;
  ProbeSpec spec;

  auto single_mode_family = [&](double obs_kappa, bool output_cosh) {
    // output_cosh=false: q-part (-sinh k0 qA' + cosh k0 qR), amplifier style;
    // output_cosh=true: q-part (cosh k1 qA' - sinh k1 qR), storage style.
    const double sh = std::sinh(obs_kappa);
    const double ch = std::cosh(obs_kappa);
    Vec qpart(4), ppart(4);
    if (output_cosh) {
      qpart << ch, 0.0, -sh, 0.0;
      ppart << 0.0, ch, 0.0, sh;
    } else {
      qpart << -sh, 0.0, ch, 0.0;
      ppart << 0.0, sh, 0.0, ch;
    }
    spec.observable = [qpart, ppart](int j, double theta, Branch branch) {
      if (j != 1) {
        throw std::invalid_argument("probe observable: single-mode kind has j = 1");
      }
      const double tp = theta + (branch == Branch::P ? kHalfPi : 0.0);
      return LinearObservable(std::cos(tp) * qpart + std::sin(tp) * ppart, 0.0);
    };
    spec.offset_coefficient = [qpart, ppart](int, double theta, Branch branch) {
      const double tp = theta + (branch == Branch::P ? kHalfPi : 0.0);
      const Vec c = std::cos(tp) * qpart + std::sin(tp) * ppart;
      return c(0) + c(1);
    };
  };

  switch (kind.tag) {
    case WitnessTag::amplifier: {
      spec.k = 1;
      spec.probe_kappa = arctanh_checked(1.0 / std::sqrt(l + 1.0), "probe kappa");
      spec.observable_kappa = arctanh_checked(std::sqrt(l + 1.0) / g, "kappa0");
      spec.input = two_mode_squeezed(spec.probe_kappa);
      single_mode_family(spec.observable_kappa, false);
      spec.randomizer = "none";
      return spec;
    }
    case WitnessTag::attenuator_or_storage: {
      spec.k = 1;
      spec.probe_kappa = arctanh_checked(1.0 / std::sqrt(l + 1.0), "probe kappa");
      spec.observable_kappa = arctanh_checked(g / std::sqrt(l + 1.0), "kappa1");
      spec.input = two_mode_squeezed(spec.probe_kappa);
      single_mode_family(spec.observable_kappa, true);
      spec.randomizer = "none";
      return spec;
    }
    case WitnessTag::purifier_high_gain:
    case WitnessTag::purifier_low_gain: {
      spec.k = 1;
      const double p = purifier_p(l, kind.mu);
      spec.probe_kappa = arctanh_checked(std::sqrt((l + kind.mu) / (l + kind.mu + l * kind.mu)),
                                         "zeta");
      spec.input = two_mode_squeezed(spec.probe_kappa);
      if (kind.tag == WitnessTag::purifier_high_gain) {
        spec.observable_kappa = arctanh_checked(std::sqrt(p) / (g * kind.mu), "kappa2");
        single_mode_family(spec.observable_kappa, false);
      } else {
        spec.observable_kappa = arctanh_checked(g * kind.mu / std::sqrt(p), "kappa3");
        single_mode_family(spec.observable_kappa, true);
      }
      spec.xi_offset_variance = g * g / (2.0 * (l + kind.mu));
      spec.randomizer =
          "classical offset xi ~ Normal(0, g^2/(2(lambda+mu))) added to the output "
          "quadratures, drawn fresh per measurement";
      return spec;
    }
    case WitnessTag::memory_multimode:
    case WitnessTag::cz_gate: {
      const int k = kind.k;
      spec.k = k;
      spec.probe_kappa = arctanh_checked(1.0 / std::sqrt(l + 1.0), "probe kappa");
      const double kappa = spec.probe_kappa;
      spec.observable_kappa = kappa;

      SymplecticOp u = kind.target_op ? *kind.target_op : identity_op(k);
      if (u.modes() != k) {
        throw std::invalid_argument("probe_spec: target_op mode count mismatch");
      }
      // k two-mode squeezed pairs (A_i, R_i), reordered to (A..., R...), then
      // U applied to both halves.
      GaussianState probe = two_mode_squeezed(kappa);
      for (int i = 1; i < k; ++i) {
        probe = tensor_product(probe, two_mode_squeezed(kappa));
      }
      std::vector<int> perm(2 * k);
      for (int i = 0; i < k; ++i) {
        perm[i] = 2 * i;          // A_i
        perm[k + i] = 2 * i + 1;  // R_i
      }
      probe = permute_modes(probe, perm);
      Mat S2 = Mat::Zero(4 * k, 4 * k);
      S2.topLeftCorner(2 * k, 2 * k) = u.S;
      S2.bottomRightCorner(2 * k, 2 * k) = u.S;
      Vec d2(4 * k);
      d2.head(2 * k) = u.d;
      d2.tail(2 * k) = u.d;
      spec.input = apply_symplectic(probe, SymplecticOp(std::move(S2), std::move(d2)));

      Mat Tinv = Mat::Identity(2 * k, 2 * k);
      if (kind.tag == WitnessTag::cz_gate) {
        const Mat T = kind.T ? *kind.T : default_cz_T(k);
        Tinv = T.inverse();
      }
      const SymplecticOp inv = u.inverse();
      const Mat rows_q = inv.S;  // row 2j-2 is the q-row of mode j
      const Vec dinv = inv.d;
      const double ch = std::cosh(kappa);
      const double sh = std::sinh(kappa);
      const Mat tinv_copy = Tinv;
      spec.observable = [k, rows_q, dinv, ch, sh, tinv_copy](int j, double theta,
                                                             Branch branch) {
        if (j < 1 || j > k) {
          throw std::invalid_argument("probe observable: group index out of range");
        }
        const double tp = theta + (branch == Branch::P ? kHalfPi : 0.0);
        const double c = std::cos(tp);
        const double s = std::sin(tp);
        const Vec rq = rows_q.row(2 * (j - 1));
        const Vec rp = rows_q.row(2 * (j - 1) + 1);
        Vec coeffs = Vec::Zero(4 * k);
        // Output block: undo the gate map first (identity for memory).
        coeffs.head(2 * k) = ch * (c * (tinv_copy.transpose() * rq) +
                                   s * (tinv_copy.transpose() * rp));
        coeffs.tail(2 * k) = sh * (-c * rq + s * rp);
        const double offset = (ch - sh) * c * dinv(2 * (j - 1)) +
                              (ch + sh) * s * dinv(2 * (j - 1) + 1);
        return LinearObservable(std::move(coeffs), offset);
      };
      spec.offset_coefficient = [](int, double, Branch) { return 0.0; };
      spec.randomizer = "none";
      return spec;
    }
    default:
      throw std::invalid_argument("probe_spec: state kinds have no channel probe");
  }
}

double mean_chi_squared(const TargetSpec& target, const GaussianState& prover) {
  const int k = target_modes(target);
  if (prover.modes != k) {
    throw std::invalid_argument("mean_chi_squared: prover mode count mismatch");
  }
  if (!std::holds_alternative<GaussianTarget>(target)) {
    // Hypergraph observables are polynomial; route through the Fock engine.
    throw std::invalid_argument(
        "mean_chi_squared: hypergraph targets need a Fock prover");
  }
  double acc = 0.0;
  for (int j = 1; j <= k; ++j) {
    for (Branch b : {Branch::Q, Branch::P}) {
      const auto obs = std::get<LinearObservable>(observable_for_target(target, j, 0.0, b));
      const Marginal m = marginal(prover, obs);
      acc += m.variance + m.mean * m.mean;
    }
  }
  return acc / (2.0 * k);
}

double mean_chi_squared(const TargetSpec& target, const FockArray& prover) {
  const int k = target_modes(target);
  if (prover.modes != k) {
    throw std::invalid_argument("mean_chi_squared: prover mode count mismatch");
  }
  if (const auto* g = std::get_if<GaussianTarget>(&target)) {
    const QuadratureMoments mom = quadrature_moments(prover);
    double acc = 0.0;
    for (int j = 1; j <= k; ++j) {
      for (Branch b : {Branch::Q, Branch::P}) {
        const auto obs =
            std::get<LinearObservable>(observable_for_target(target, j, 0.0, b));
        acc += obs.coeffs.dot(mom.second * obs.coeffs) +
               2.0 * obs.offset * obs.coeffs.dot(mom.mean) + obs.offset * obs.offset;
      }
    }
    (void)g;
    return acc / (2.0 * k);
  }
  double acc = 0.0;
  for (int j = 1; j <= k; ++j) {
    for (Branch b : {Branch::Q, Branch::P}) {
      const auto poly =
          std::get<PolynomialObservable>(observable_for_target(target, j, 0.0, b));
      // Square the linear-in-terms polynomial term by term.
      PolynomialObservable sq;
      for (const auto& t1 : poly.terms) {
        for (const auto& t2 : poly.terms) {
          PolynomialObservable::Term prod;
          prod.coefficient = t1.coefficient * t2.coefficient;
          prod.factors = t1.factors;
          prod.factors.insert(prod.factors.end(), t2.factors.begin(), t2.factors.end());
          sq.terms.push_back(std::move(prod));
        }
      }
      acc += expectation(prover, sq);
    }
  }
  return acc / (2.0 * k);
}

double witness_expectation_oracle(const TargetSpec& target, const GaussianState& prover) {
  const int k = target_modes(target);
  return 1.0 + 0.5 * k - k * mean_chi_squared(target, prover);
}

double witness_expectation_oracle(const TargetSpec& target, const FockArray& prover) {
  const int k = target_modes(target);
  return 1.0 + 0.5 * k - k * mean_chi_squared(target, prover);
}

double witness_expectation_oracle(const WitnessKind& kind, const GaussianChannel& prover) {
  const ProbeSpec spec = probe_spec(kind);
  const int k = spec.k;
  if (prover.modes() != k) {
    throw std::invalid_argument("witness_expectation_oracle: channel mode mismatch");
  }
  const GaussianState out = apply_channel(spec.input, embed_channel(prover, 2 * k));
  double acc = 0.0;
  for (int j = 1; j <= k; ++j) {
    for (Branch b : {Branch::Q, Branch::P}) {
      const Marginal m = marginal(out, spec.observable(j, 0.0, b));
      double e2 = m.variance + m.mean * m.mean;
      if (spec.xi_offset_variance > 0.0) {
        const double w = spec.offset_coefficient(j, 0.0, b);
        e2 += w * w * spec.xi_offset_variance;
      }
      acc += e2;
    }
  }
  const double mean_chi2 = acc / (2.0 * k);
  return witness_value_from_mean(kind, mean_chi2);
}

}  // namespace cvverify
