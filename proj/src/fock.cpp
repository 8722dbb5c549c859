#include "cvverify/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cvverify {

namespace {

long checked_dim(int modes, int cutoff) {
  if (modes < 1 || cutoff < 1) {
    throw std::invalid_argument("FockArray: modes and cutoff must be positive");
  }
  long d = 1;
  for (int i = 0; i < modes; ++i) {
    d *= cutoff;
    if (d > kMaxFockDimension) {
      throw std::invalid_argument("FockArray: cutoff^modes exceeds the " +
                                  std::to_string(kMaxFockDimension) +
                                  "-dimensional cap");
    }
  }
  return d;
}

// Iterates slices of the amplitude tensor along `mode` (1-based): the flat
// index decomposes as pre * (D * post) + level * post + rest.
struct ModeSlicing {
  long pre, post;
  ModeSlicing(int modes, int cutoff, int mode) {
    pre = 1;
    for (int i = 0; i < mode - 1; ++i) pre *= cutoff;
    post = 1;
    for (int i = mode; i < modes; ++i) post *= cutoff;
  }
};

void check_mode(const FockArray& state, int mode) {
  if (mode < 1 || mode > state.modes) {
    throw std::invalid_argument("mode index out of range");
  }
}

CMat local_power(QuadKind kind, int power, int cutoff) {
  const CMat base = (kind == QuadKind::Q) ? q_matrix(cutoff) : p_matrix(cutoff);
  CMat acc = CMat::Identity(cutoff, cutoff);
  for (int i = 0; i < power; ++i) acc = acc * base;
  return acc;
}

std::vector<double> outcome_weights(const FockArray& state,
                                    const Eigen::SelfAdjointEigenSolver<CMat>& eig) {
  const long d = state.dim();
  std::vector<double> w(d);
  if (state.is_pure()) {
    CVec proj = eig.eigenvectors().adjoint() * state.amplitudes;
    for (long i = 0; i < d; ++i) w[i] = std::norm(proj(i));
  } else {
    CMat proj = eig.eigenvectors().adjoint() * state.density * eig.eigenvectors();
    for (long i = 0; i < d; ++i) w[i] = std::max(0.0, proj(i, i).real());
  }
  return w;
}

long sample_from_weights(const std::vector<double>& w, RandomStream& rng) {
  double total = 0.0;
  for (double x : w) total += std::max(0.0, x);
  if (total <= 0.0) {
    throw std::runtime_error("born sampling: state has no weight on outcomes");
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    u -= std::max(0.0, w[i]);
    if (u <= 0.0) return static_cast<long>(i);
  }
  return static_cast<long>(w.size()) - 1;
}

}  // namespace

long FockArray::dim() const { return checked_dim(modes, cutoff); }

void FockArray::validate() const {
  const long d = checked_dim(modes, cutoff);
  if (is_pure()) {
    if (amplitudes.size() != d) {
      throw std::invalid_argument("FockArray: amplitude length mismatch");
    }
    const double norm = amplitudes.squaredNorm();
    if (norm < 1.0 - 1e-6 || norm > 1.0 + 1e-9) {
      throw std::invalid_argument("FockArray: norm " + std::to_string(norm) +
                                  " outside [1-1e-6, 1]");
    }
  } else {
    if (density.rows() != d || density.cols() != d) {
      throw std::invalid_argument("FockArray: density shape mismatch");
    }
    if ((density - density.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
      throw std::invalid_argument("FockArray: density not Hermitian");
    }
    const double tr = density.trace().real();
    if (tr < 1.0 - 1e-6 || tr > 1.0 + 1e-9) {
      throw std::invalid_argument("FockArray: trace outside [1-1e-6, 1]");
    }
    Eigen::SelfAdjointEigenSolver<CMat> eig(density);
    if (eig.eigenvalues().minCoeff() < -1e-9) {
      throw std::invalid_argument("FockArray: density has negative eigenvalues");
    }
  }
  if (leakage < 0.0) {
    throw std::invalid_argument("FockArray: negative leakage");
  }
}

FockArray FockArray::pure(int modes, int cutoff, CVec amplitudes, double leakage) {
  FockArray f;
  f.modes = modes;
  f.cutoff = cutoff;
  f.amplitudes = std::move(amplitudes);
  f.leakage = leakage;
  f.validate();
  return f;
}

FockArray FockArray::mixed(int modes, int cutoff, CMat density, double leakage) {
  if (modes > 2) {
    throw std::invalid_argument(
        "FockArray: explicit densities supported up to 2 modes; use classical "
        "mixtures of pure states beyond that");
  }
  FockArray f;
  f.modes = modes;
  f.cutoff = cutoff;
  f.density = std::move(density);
  f.leakage = leakage;
  f.validate();
  return f;
}

FockArray FockArray::basis_state(int modes, int cutoff, const std::vector<int>& levels) {
  if (static_cast<int>(levels.size()) != modes) {
    throw std::invalid_argument("basis_state: one level per mode required");
  }
  const long d = checked_dim(modes, cutoff);
  long idx = 0;
  for (int m = 0; m < modes; ++m) {
    if (levels[m] < 0 || levels[m] >= cutoff) {
      throw std::invalid_argument("basis_state: level outside cutoff");
    }
    idx = idx * cutoff + levels[m];
  }
  CVec amp = CVec::Zero(d);
  amp(idx) = 1.0;
  return pure(modes, cutoff, std::move(amp));
}

Eigen::MatrixXd ladder(int cutoff) {
  if (cutoff < 2) {
    throw std::invalid_argument("ladder: cutoff must be >= 2");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) {
    a(n - 1, n) = std::sqrt(static_cast<double>(n));
  }
  return a;
}

CMat q_matrix(int cutoff) {
  const Eigen::MatrixXd a = ladder(cutoff);
  return ((a + a.transpose()) / std::sqrt(2.0)).cast<std::complex<double>>();
}

CMat p_matrix(int cutoff) {
  const Eigen::MatrixXd a = ladder(cutoff);
  Eigen::MatrixXd asym = a.transpose() - a;
  return std::complex<double>(0.0, 1.0 / std::sqrt(2.0)) *
         asym.cast<std::complex<double>>();
}

CMat number_matrix(int cutoff) {
  const Eigen::MatrixXd a = ladder(cutoff);
  return (a.transpose() * a).cast<std::complex<double>>();
}

CMat embed_single_mode(const CMat& op, int modes, int mode, int cutoff) {
  const long d = checked_dim(modes, cutoff);
  if (d * d > 64L * 1024 * 1024) {
    throw std::invalid_argument("embed_single_mode: dense embedding too large");
  }
  ModeSlicing sl(modes, cutoff, mode);
  CMat out = CMat::Zero(d, d);
  for (long pre = 0; pre < sl.pre; ++pre) {
    for (long post = 0; post < sl.post; ++post) {
      const long base = pre * cutoff * sl.post + post;
      for (int r = 0; r < cutoff; ++r) {
        for (int c = 0; c < cutoff; ++c) {
          if (op(r, c) != std::complex<double>(0.0, 0.0)) {
            out(base + r * sl.post, base + c * sl.post) = op(r, c);
          }
        }
      }
    }
  }
  return out;
}

CMat build_observable(const PolynomialObservable& spec, int modes, int cutoff) {
  const long d = checked_dim(modes, cutoff);
  if (d * d > 64L * 1024 * 1024) {
    throw std::invalid_argument("build_observable: dense matrix too large");
  }
  CMat out = CMat::Zero(d, d);
  for (const auto& term : spec.terms) {
    // Collapse factors per mode and reject non-commuting combinations.
    std::map<int, std::pair<QuadKind, int>> per_mode;
    for (const auto& f : term.factors) {
      if (f.mode < 1 || f.mode > modes) {
        throw std::invalid_argument("build_observable: factor mode out of range");
      }
      if (f.power < 1) {
        throw std::invalid_argument("build_observable: factor power must be >= 1");
      }
      auto it = per_mode.find(f.mode);
      if (it == per_mode.end()) {
        per_mode[f.mode] = {f.kind, f.power};
      } else {
        if (it->second.first != f.kind) {
          throw std::invalid_argument(
              "build_observable: q and p factors on the same mode do not commute");
        }
        it->second.second += f.power;
      }
    }
    CMat acc = CMat::Identity(1, 1);
    for (int mode = 1; mode <= modes; ++mode) {
      CMat local;
      auto it = per_mode.find(mode);
      if (it == per_mode.end()) {
        local = CMat::Identity(cutoff, cutoff);
      } else {
        local = local_power(it->second.first, it->second.second, cutoff);
      }
      CMat next(acc.rows() * cutoff, acc.cols() * cutoff);
      for (long r = 0; r < acc.rows(); ++r) {
        for (long c = 0; c < acc.cols(); ++c) {
          next.block(r * cutoff, c * cutoff, cutoff, cutoff) = acc(r, c) * local;
        }
      }
      acc = std::move(next);
    }
    out += term.coefficient * acc;
  }
  const double scale = std::max(1.0, out.cwiseAbs().maxCoeff());
  if ((out - out.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("build_observable: result is not Hermitian");
  }
  return out;
}

ObservableSampler::ObservableSampler(CMat observable) : op_(std::move(observable)) {
  if (op_.rows() != op_.cols()) {
    throw std::invalid_argument("ObservableSampler: matrix must be square");
  }
  const double scale = std::max(1.0, op_.cwiseAbs().maxCoeff());
  if ((op_ - op_.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("ObservableSampler: observable must be Hermitian");
  }
}

void ObservableSampler::ensure_decomposed() const {
  std::call_once(once_, [this]() {
    auto eig = std::make_unique<Eigen::SelfAdjointEigenSolver<CMat>>(op_);
    if (eig->info() != Eigen::Success) {
      throw std::runtime_error("ObservableSampler: eigendecomposition failed");
    }
    eig_ = std::move(eig);
  });
}

const Eigen::VectorXd& ObservableSampler::eigenvalues() const {
  ensure_decomposed();
  return eig_->eigenvalues();
}

double ObservableSampler::sample(const FockArray& state, RandomStream& rng) const {
  ensure_decomposed();
  if (state.dim() != op_.rows()) {
    throw std::invalid_argument("ObservableSampler: dimension mismatch");
  }
  const auto w = outcome_weights(state, *eig_);
  return eig_->eigenvalues()(sample_from_weights(w, rng));
}

double born_sample(const FockArray& state, const CMat& observable, RandomStream& rng) {
  ObservableSampler sampler(observable);
  return sampler.sample(state, rng);
}

double expectation(const FockArray& state, const CMat& observable) {
  if (state.dim() != observable.rows() || observable.rows() != observable.cols()) {
    throw std::invalid_argument("expectation: dimension mismatch");
  }
  if (state.is_pure()) {
    return (state.amplitudes.adjoint() * observable * state.amplitudes)(0, 0).real();
  }
  return (state.density * observable).trace().real();
}

void apply_single_mode(FockArray& state, const CMat& op, int mode) {
  check_mode(state, mode);
  if (op.rows() != state.cutoff || op.cols() != state.cutoff) {
    throw std::invalid_argument("apply_single_mode: operator shape mismatch");
  }
  if (!state.is_pure()) {
    const CMat big = embed_single_mode(op, state.modes, mode, state.cutoff);
    state.density = big * state.density * big.adjoint();
    return;
  }
  ModeSlicing sl(state.modes, state.cutoff, mode);
  const int D = state.cutoff;
  CVec out = CVec::Zero(state.amplitudes.size());
  for (long pre = 0; pre < sl.pre; ++pre) {
    for (long post = 0; post < sl.post; ++post) {
      const long base = pre * D * sl.post + post;
      for (int r = 0; r < D; ++r) {
        std::complex<double> acc = 0.0;
        for (int c = 0; c < D; ++c) {
          acc += op(r, c) * state.amplitudes(base + c * sl.post);
        }
        out(base + r * sl.post) = acc;
      }
    }
  }
  state.amplitudes = std::move(out);
}

QuadratureMoments quadrature_moments(const FockArray& state) {
  const int k = state.modes;
  QuadratureMoments m;
  m.mean = Vec::Zero(2 * k);
  m.second = Mat::Zero(2 * k, 2 * k);
  if (state.is_pure()) {
    std::vector<CVec> applied(2 * k);
    const CMat q = q_matrix(state.cutoff);
    const CMat p = p_matrix(state.cutoff);
    for (int j = 0; j < k; ++j) {
      FockArray tmp = state;
      apply_single_mode(tmp, q, j + 1);
      applied[2 * j] = tmp.amplitudes;
      tmp = state;
      apply_single_mode(tmp, p, j + 1);
      applied[2 * j + 1] = tmp.amplitudes;
    }
    for (int i = 0; i < 2 * k; ++i) {
      m.mean(i) = (state.amplitudes.adjoint() * applied[i])(0, 0).real();
      for (int j = i; j < 2 * k; ++j) {
        const double v = (applied[i].adjoint() * applied[j])(0, 0).real();
        m.second(i, j) = v;
        m.second(j, i) = v;
      }
    }
    return m;
  }
  // Mixed states are capped at two modes, so dense embeddings stay small.
  std::vector<CMat> ops(2 * k);
  for (int j = 0; j < k; ++j) {
    ops[2 * j] = embed_single_mode(q_matrix(state.cutoff), k, j + 1, state.cutoff);
    ops[2 * j + 1] = embed_single_mode(p_matrix(state.cutoff), k, j + 1, state.cutoff);
  }
  for (int i = 0; i < 2 * k; ++i) {
    m.mean(i) = (state.density * ops[i]).trace().real();
    for (int j = i; j < 2 * k; ++j) {
      const double v =
          0.5 * ((state.density * (ops[i] * ops[j] + ops[j] * ops[i])).trace().real());
      m.second(i, j) = v;
      m.second(j, i) = v;
    }
  }
  return m;
}

double expectation(const FockArray& state, const PolynomialObservable& spec) {
  double acc = 0.0;
  const CMat q = q_matrix(state.cutoff);
  const CMat p = p_matrix(state.cutoff);
  for (const auto& term : spec.terms) {
    if (state.is_pure()) {
      FockArray tmp = state;
      for (const auto& f : term.factors) {
        const CMat base = (f.kind == QuadKind::Q) ? q : p;
        for (int i = 0; i < f.power; ++i) {
          apply_single_mode(tmp, base, f.mode);
        }
      }
      acc += term.coefficient *
             (state.amplitudes.adjoint() * tmp.amplitudes)(0, 0).real();
    } else {
      CMat rho = state.density;
      for (const auto& f : term.factors) {
        const CMat base = (f.kind == QuadKind::Q) ? q : p;
        const CMat big = embed_single_mode(base, state.modes, f.mode, state.cutoff);
        for (int i = 0; i < f.power; ++i) {
          rho = rho * big;
        }
      }
      acc += term.coefficient * rho.trace().real();
    }
  }
  return acc;
}

double fidelity(const FockArray& a, const FockArray& b) {
  if (a.modes != b.modes || a.cutoff != b.cutoff) {
    throw std::invalid_argument("fidelity: shape mismatch");
  }
  if (a.is_pure() && b.is_pure()) {
    return std::norm((a.amplitudes.adjoint() * b.amplitudes)(0, 0));
  }
  if (!a.is_pure() && b.is_pure()) {
    return (b.amplitudes.adjoint() * a.density * b.amplitudes)(0, 0).real();
  }
  if (a.is_pure() && !b.is_pure()) {
    return fidelity(b, a);
  }
  throw std::invalid_argument("fidelity: mixed/mixed comparison not supported");
}

CVec squeezed_vacuum_amplitudes(double xi, int cutoff) {
  CVec amp = CVec::Zero(cutoff);
  const double t = std::tanh(xi);
  const double abs_t = std::abs(t);
  const double lsech = -0.5 * std::log(std::cosh(xi));
  amp(0) = std::exp(lsech);
  if (abs_t > 0.0) {
    for (int n = 1; 2 * n < cutoff; ++n) {
      const double lg = lsech + n * std::log(abs_t) + 0.5 * std::lgamma(2.0 * n + 1.0) -
                        n * std::log(2.0) - std::lgamma(n + 1.0);
      const double sign = (t < 0.0 && n % 2 == 1) ? -1.0 : 1.0;
      amp(2 * n) = sign * std::exp(lg);
    }
  }
  return amp;
}

CVec coherent_amplitudes(std::complex<double> alpha, int cutoff) {
  CVec amp = CVec::Zero(cutoff);
  const double a2 = std::norm(alpha);
  amp(0) = std::exp(-0.5 * a2);
  for (int n = 1; n < cutoff; ++n) {
    amp(n) = amp(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  }
  return amp;
}

const QuadratureBasis& quadrature_basis(int cutoff) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<QuadratureBasis>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(cutoff);
  if (it == cache.end()) {
    Eigen::MatrixXd q = q_matrix(cutoff).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("quadrature_basis: eigendecomposition failed");
    }
    auto basis = std::make_unique<QuadratureBasis>();
    basis->nodes = eig.eigenvalues();
    basis->V = eig.eigenvectors();
    it = cache.emplace(cutoff, std::move(basis)).first;
  }
  return *it->second;
}

namespace {

// Applies V^T (to_position) or V (back) on one tensor mode.
void transform_mode(FockArray& state, int mode, const Eigen::MatrixXd& V,
                    bool transpose) {
  CMat op = (transpose ? V.transpose() : V).cast<std::complex<double>>();
  apply_single_mode(state, op, mode);
}

}  // namespace

void apply_cz_exponential(FockArray& state, const std::vector<int>& edge, double sign) {
  if (!state.is_pure()) {
    throw std::invalid_argument("apply_cz_exponential: pure states only");
  }
  if (edge.empty()) {
    throw std::invalid_argument("apply_cz_exponential: empty edge");
  }
  for (int v : edge) check_mode(state, v);
  const auto& basis = quadrature_basis(state.cutoff);
  for (int v : edge) transform_mode(state, v, basis.V, true);
  // Diagonal phase exp(i * sign * prod_l x_l) over the joint position grid.
  const int D = state.cutoff;
  const long d = state.dim();
  std::vector<long> strides(state.modes);
  long s = 1;
  for (int m = state.modes - 1; m >= 0; --m) {
    strides[m] = s;
    s *= D;
  }
  for (long idx = 0; idx < d; ++idx) {
    double prod = 1.0;
    for (int v : edge) {
      const long level = (idx / strides[v - 1]) % D;
      prod *= basis.nodes(level);
    }
    state.amplitudes(idx) *= std::exp(std::complex<double>(0.0, sign * prod));
  }
  for (int v : edge) transform_mode(state, v, basis.V, false);
}

FockArray hypergraph_state(const std::vector<std::vector<int>>& edges, double xi,
                           int modes, int cutoff, double leakage_budget) {
  if (xi < 0.0) {
    throw std::invalid_argument("hypergraph_state: xi must be >= 0");
  }
  checked_dim(modes, cutoff);
  const CVec single = squeezed_vacuum_amplitudes(xi, cutoff);
  // Per-mode truncation tail from the analytic series, through level D-2.
  double kept = 0.0;
  for (int n = 0; n <= cutoff - 2; ++n) kept += std::norm(single(n));
  const double tail = std::max(0.0, 1.0 - kept);
  const double leakage = 1.0 - std::pow(1.0 - tail, modes);
  if (leakage > leakage_budget) {
    throw std::invalid_argument(
        "hypergraph_state: truncation leakage " + std::to_string(leakage) +
        " exceeds the budget " + std::to_string(leakage_budget));
  }
  const long d = checked_dim(modes, cutoff);
  CVec amp = CVec::Ones(1);
  for (int m = 0; m < modes; ++m) {
    CVec next(amp.size() * cutoff);
    for (long i = 0; i < amp.size(); ++i) {
      next.segment(i * cutoff, cutoff) = amp(i) * single;
    }
    amp = std::move(next);
  }
  // Renormalize the clipped product so downstream norm checks see 1.
  amp /= amp.norm();
  FockArray state = FockArray::pure(modes, cutoff, std::move(amp), leakage);
  for (const auto& edge : edges) {
    for (int v : edge) {
      if (v < 1 || v > modes) {
        throw std::invalid_argument("hypergraph_state: vertex out of range");
      }
    }
    const double before = state.amplitudes.norm();
    apply_cz_exponential(state, edge, -1.0);
    const double after = state.amplitudes.norm();
    if (std::abs(after - before) > 1e-6) {
      throw std::runtime_error("hypergraph_state: controlled-phase exponential lost norm");
    }
  }
  (void)d;
  return state;
}

FockArray gaussian_to_fock(const GaussianState& state, int cutoff) {
  const double tol = 1e-9;
  const int k = state.modes;
  const Mat vac = 0.5 * Mat::Identity(2 * k, 2 * k);
  if ((state.cov - vac).cwiseAbs().maxCoeff() < tol) {
    if (state.mean.cwiseAbs().maxCoeff() < tol) {
      return FockArray::basis_state(k, cutoff, std::vector<int>(k, 0));
    }
    if (k == 1) {
      const std::complex<double> alpha((state.mean(0)) / std::sqrt(2.0),
                                       (state.mean(1)) / std::sqrt(2.0));
      CVec amp = coherent_amplitudes(alpha, cutoff);
      const double leak = std::max(0.0, 1.0 - amp.squaredNorm());
      amp /= amp.norm();
      return FockArray::pure(1, cutoff, std::move(amp), leak);
    }
    throw std::invalid_argument("gaussian_to_fock: unsupported displaced multimode state");
  }
  if (k == 1) {
    if (state.mean.cwiseAbs().maxCoeff() > tol) {
      throw std::invalid_argument("gaussian_to_fock: displaced squeezed states unsupported");
    }
    if (std::abs(state.cov(0, 1)) > tol) {
      throw std::invalid_argument("gaussian_to_fock: rotated squeezed states unsupported");
    }
    const double vq = state.cov(0, 0);
    const double vp = state.cov(1, 1);
    if (std::abs(vq * vp - 0.25) > 1e-8) {
      throw std::invalid_argument("gaussian_to_fock: single-mode state is not pure");
    }
    const double xi = 0.5 * std::log(2.0 * vq);
    CVec amp = squeezed_vacuum_amplitudes(xi, cutoff);
    const double leak = std::max(0.0, 1.0 - amp.squaredNorm());
    amp /= amp.norm();
    return FockArray::pure(1, cutoff, std::move(amp), leak);
  }
  if (k == 2) {
    const double s = state.cov(0, 2);
    const double kappa = 0.5 * std::asinh(2.0 * s);
    const GaussianState ref = two_mode_squeezed(kappa);
    if ((state.cov - ref.cov).cwiseAbs().maxCoeff() < 1e-8 &&
        state.mean.cwiseAbs().maxCoeff() < tol) {
      CVec amp = CVec::Zero(static_cast<long>(cutoff) * cutoff);
      const double t = std::tanh(kappa);
      double c = 1.0 / std::cosh(kappa);
      double kept = 0.0;
      for (int n = 0; n < cutoff; ++n) {
        amp(static_cast<long>(n) * cutoff + n) = c;
        kept += c * c;
        c *= t;
      }
      const double leak = std::max(0.0, 1.0 - kept);
      amp /= amp.norm();
      return FockArray::pure(2, cutoff, std::move(amp), leak);
    }
  }
  throw std::invalid_argument("gaussian_to_fock: unsupported Gaussian family");
}

double sample_linear_on_fock(const FockArray& state, const LinearObservable& obs,
                             RandomStream& rng) {
  const int k = state.modes;
  if (obs.coeffs.size() != 2 * k) {
    throw std::invalid_argument("sample_linear_on_fock: coefficient length mismatch");
  }
  const int D = state.cutoff;
  const auto& basis = quadrature_basis(D);

  std::vector<int> involved;
  std::vector<double> r(k, 0.0);
  FockArray work = state;
  for (int j = 0; j < k; ++j) {
    const double cq = obs.coeffs(2 * j);
    const double cp = obs.coeffs(2 * j + 1);
    r[j] = std::hypot(cq, cp);
    if (r[j] == 0.0) continue;
    involved.push_back(j);
    const double phi = std::atan2(cp, cq);
    if (phi != 0.0) {
      // Rotating the mode by exp(-i phi n) turns q(phi) into plain q.
      CMat phase = CMat::Zero(D, D);
      for (int n = 0; n < D; ++n) {
        phase(n, n) = std::exp(std::complex<double>(0.0, -phi * n));
      }
      apply_single_mode(work, phase, j + 1);
    }
    transform_mode(work, j + 1, basis.V, true);
  }
  if (involved.empty()) {
    throw std::invalid_argument("sample_linear_on_fock: all coefficients vanish");
  }

  std::vector<long> strides(k);
  long s = 1;
  for (int m = k - 1; m >= 0; --m) {
    strides[m] = s;
    s *= D;
  }
  long joint = 1;
  for (std::size_t i = 0; i < involved.size(); ++i) joint *= D;
  std::vector<double> weights(joint, 0.0);
  const long d = work.dim();
  if (work.is_pure()) {
    for (long idx = 0; idx < d; ++idx) {
      long key = 0;
      for (int j : involved) key = key * D + (idx / strides[j]) % D;
      weights[key] += std::norm(work.amplitudes(idx));
    }
  } else {
    for (long idx = 0; idx < d; ++idx) {
      long key = 0;
      for (int j : involved) key = key * D + (idx / strides[j]) % D;
      weights[key] += std::max(0.0, work.density(idx, idx).real());
    }
  }
  long key = sample_from_weights(weights, rng);
  double value = obs.offset;
  for (auto it = involved.rbegin(); it != involved.rend(); ++it) {
    const long level = key % D;
    key /= D;
    value += r[*it] * basis.nodes(level);
  }
  return value;
}

CMat squeezer_matrix(double xi, int cutoff) {
  const Eigen::MatrixXd a = ladder(cutoff);
  Eigen::MatrixXd gen = 0.5 * xi * (a.transpose() * a.transpose() - a * a);
  // gen is real antisymmetric, so i*gen is Hermitian and exp(gen) unitary.
  CMat h = std::complex<double>(0.0, 1.0) * gen.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<CMat> eig(h);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("squeezer_matrix: eigendecomposition failed");
  }
  CVec phases(cutoff);
  for (int i = 0; i < cutoff; ++i) {
    phases(i) = std::exp(std::complex<double>(0.0, -eig.eigenvalues()(i)));
  }
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace cvverify
