#include "cvverify/phasespace.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cvverify {

namespace {

constexpr double kMinMarginalVariance = 1e-12;

void check_square(const Mat& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(dim) + "x" + std::to_string(dim) +
                                " matrix, got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
}

double min_eig_hermitian(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  return solver.eigenvalues().minCoeff();
}

}  // namespace

Mat symplectic_form(int modes) {
  Mat omega = Mat::Zero(2 * modes, 2 * modes);
  for (int j = 0; j < modes; ++j) {
    omega(2 * j, 2 * j + 1) = 1.0;
    omega(2 * j + 1, 2 * j) = -1.0;
  }
  return omega;
}

GaussianState::GaussianState(int modes_, Vec mean_, Mat cov_)
    : modes(modes_), mean(std::move(mean_)), cov(std::move(cov_)) {
  validate();
}

void GaussianState::validate() const {
  if (modes < 1) {
    throw std::invalid_argument("GaussianState: modes must be >= 1");
  }
  const int dim = 2 * modes;
  if (mean.size() != dim) {
    throw std::invalid_argument("GaussianState: mean has wrong length");
  }
  check_square(cov, dim, "GaussianState cov");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("GaussianState: covariance is not symmetric");
  }
  Eigen::MatrixXcd h = cov.cast<std::complex<double>>();
  h += std::complex<double>(0.0, 0.5) * symplectic_form(modes).cast<std::complex<double>>();
  if (min_eig_hermitian(h) < -1e-9) {
    throw std::invalid_argument(
        "GaussianState: covariance violates the uncertainty relation");
  }
}

SymplecticOp::SymplecticOp(Mat S_, Vec d_) : S(std::move(S_)), d(std::move(d_)) {
  validate();
}

SymplecticOp::SymplecticOp(Mat S_) : S(std::move(S_)) {
  d = Vec::Zero(S.rows());
  validate();
}

void SymplecticOp::validate(double tol) const {
  if (S.rows() != S.cols() || S.rows() % 2 != 0 || S.rows() == 0) {
    throw std::invalid_argument("SymplecticOp: S must be square with even dimension");
  }
  if (d.size() != S.rows()) {
    throw std::invalid_argument("SymplecticOp: d has wrong length");
  }
  const Mat omega = symplectic_form(modes());
  if ((S * omega * S.transpose() - omega).cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("SymplecticOp: S Omega S^T != Omega");
  }
}

SymplecticOp SymplecticOp::inverse() const {
  const Mat omega = symplectic_form(modes());
  Mat sinv = -omega * S.transpose() * omega;
  Vec dinv = -(sinv * d);
  return SymplecticOp(std::move(sinv), std::move(dinv));
}

GaussianChannel::GaussianChannel(Mat X_, Mat Y_, Vec shift_)
    : X(std::move(X_)), Y(std::move(Y_)), shift(std::move(shift_)) {
  validate();
}

GaussianChannel::GaussianChannel(Mat X_, Mat Y_) : X(std::move(X_)), Y(std::move(Y_)) {
  shift = Vec::Zero(X.rows());
  validate();
}

void GaussianChannel::validate(double tol) const {
  if (X.rows() != X.cols() || X.rows() % 2 != 0 || X.rows() == 0) {
    throw std::invalid_argument("GaussianChannel: X must be square with even dimension");
  }
  check_square(Y, static_cast<int>(X.rows()), "GaussianChannel Y");
  if (shift.size() != X.rows()) {
    throw std::invalid_argument("GaussianChannel: shift has wrong length");
  }
  if ((Y - Y.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, Y.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("GaussianChannel: Y is not symmetric");
  }
  const Mat omega = symplectic_form(modes());
  Eigen::MatrixXcd h = Y.cast<std::complex<double>>();
  h += std::complex<double>(0.0, 0.5) *
       (omega - X * omega * X.transpose()).cast<std::complex<double>>();
  if (min_eig_hermitian(h) < -tol) {
    throw std::invalid_argument("GaussianChannel: complete positivity violated");
  }
}

LinearObservable::LinearObservable(Vec coeffs_, double offset_)
    : coeffs(std::move(coeffs_)), offset(offset_) {
  if (coeffs.size() == 0 || coeffs.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("LinearObservable: coefficients must not all vanish");
  }
}

GaussianState make_vacuum(int modes) {
  if (modes < 1) {
    throw std::invalid_argument("make_vacuum: modes must be >= 1");
  }
  return GaussianState(modes, Vec::Zero(2 * modes),
                       0.5 * Mat::Identity(2 * modes, 2 * modes));
}

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op) {
  if (op.modes() != state.modes) {
    throw std::invalid_argument("apply_symplectic: mode count mismatch");
  }
  return GaussianState(state.modes, op.S * state.mean + op.d,
                       op.S * state.cov * op.S.transpose());
}

GaussianState apply_channel(const GaussianState& state, const GaussianChannel& ch) {
  if (ch.modes() != state.modes) {
    throw std::invalid_argument("apply_channel: mode count mismatch");
  }
  Mat cov = ch.X * state.cov * ch.X.transpose() + ch.Y;
  cov = 0.5 * (cov + cov.transpose());
  return GaussianState(state.modes, ch.X * state.mean + ch.shift, std::move(cov));
}

GaussianState two_mode_squeezed(double kappa) {
  if (!std::isfinite(kappa)) {
    throw std::invalid_argument("two_mode_squeezed: kappa must be finite");
  }
  const double c = 0.5 * std::cosh(2.0 * kappa);
  const double s = 0.5 * std::sinh(2.0 * kappa);
  Mat cov = Mat::Zero(4, 4);
  cov(0, 0) = cov(1, 1) = cov(2, 2) = cov(3, 3) = c;
  cov(0, 2) = cov(2, 0) = s;
  cov(1, 3) = cov(3, 1) = -s;
  return GaussianState(2, Vec::Zero(4), std::move(cov));
}

Marginal marginal(const GaussianState& state, const LinearObservable& obs) {
  if (obs.coeffs.size() != state.mean.size()) {
    throw std::invalid_argument("marginal: coefficient length mismatch");
  }
  Marginal m;
  m.mean = obs.coeffs.dot(state.mean) + obs.offset;
  m.variance = obs.coeffs.dot(state.cov * obs.coeffs);
  if (m.variance < kMinMarginalVariance) {
    throw std::domain_error("marginal: degenerate variance");
  }
  return m;
}

double sample_homodyne(const GaussianState& state, const LinearObservable& obs,
                       RandomStream& rng) {
  const Marginal m = marginal(state, obs);
  return rng.normal(m.mean, std::sqrt(m.variance));
}

double pure_state_fidelity(const GaussianState& target, const GaussianState& actual) {
  if (target.modes != actual.modes) {
    throw std::invalid_argument("pure_state_fidelity: mode count mismatch");
  }
  const int dim = 2 * target.modes;
  const double purity = (2.0 * target.cov).determinant();
  if (std::abs(purity - 1.0) > 1e-6) {
    throw std::invalid_argument("pure_state_fidelity: target is not pure");
  }
  Mat sum = target.cov + actual.cov;
  Eigen::LLT<Mat> llt(sum);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("pure_state_fidelity: covariance sum not positive definite");
  }
  const Vec delta = target.mean - actual.mean;
  const Vec w = llt.solve(delta);
  double logdet = 0.0;
  for (int i = 0; i < dim; ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  const double f = std::exp(-0.5 * delta.dot(w) - 0.5 * logdet);
  return std::min(1.0, std::max(0.0, f));
}

double coherent_average_fidelity(const GaussianChannel& ch, double lambda, double g) {
  if (ch.modes() != 1) {
    throw std::invalid_argument("coherent_average_fidelity: single-mode channel required");
  }
  if (!(lambda > 0.0) || !(g > 0.0)) {
    throw std::invalid_argument("coherent_average_fidelity: lambda and g must be positive");
  }
  // Output state for input |alpha>: mean X mu + shift, cov X X^T/2 + Y with
  // mu = sqrt(2) (Re a, Im a). Overlap with |g alpha> is a Gaussian in mu,
  // so the modulated average is a 2D Gaussian integral.
  const Mat M = 0.5 * ch.X * ch.X.transpose() + ch.Y + 0.5 * Mat::Identity(2, 2);
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("coherent_average_fidelity: unphysical output covariance");
  }
  const Mat C = ch.X - g * Mat::Identity(2, 2);
  const Mat Minv = llt.solve(Mat::Identity(2, 2));
  // Integrand: exp(-(lambda/2) mu.mu - (C mu + s)^T Minv (C mu + s)/2) / sqrt(det M)
  const Mat A = lambda * Mat::Identity(2, 2) + C.transpose() * Minv * C;
  Eigen::LLT<Mat> lltA(A);
  if (lltA.info() != Eigen::Success) {
    throw std::domain_error("coherent_average_fidelity: divergent modulation integral");
  }
  const Vec s = ch.shift;
  const Vec b = C.transpose() * (Minv * s);
  const double quad = s.dot(Minv * s) - b.dot(lltA.solve(b));
  const double detM = M.determinant();
  const double detA = A.determinant();
  return lambda / std::sqrt(detM * detA) * std::exp(-0.5 * quad);
}

SymplecticOp identity_op(int modes) {
  return SymplecticOp(Mat::Identity(2 * modes, 2 * modes), Vec::Zero(2 * modes));
}

SymplecticOp momentum_squeezer(int modes, int mode, double xi) {
  if (mode < 0 || mode >= modes) {
    throw std::invalid_argument("momentum_squeezer: mode out of range");
  }
  Mat S = Mat::Identity(2 * modes, 2 * modes);
  S(2 * mode, 2 * mode) = std::exp(xi);
  S(2 * mode + 1, 2 * mode + 1) = std::exp(-xi);
  return SymplecticOp(std::move(S));
}

SymplecticOp phase_rotation_op(int modes, int mode, double theta) {
  if (mode < 0 || mode >= modes) {
    throw std::invalid_argument("phase_rotation_op: mode out of range");
  }
  Mat S = Mat::Identity(2 * modes, 2 * modes);
  S(2 * mode, 2 * mode) = std::cos(theta);
  S(2 * mode, 2 * mode + 1) = std::sin(theta);
  S(2 * mode + 1, 2 * mode) = -std::sin(theta);
  S(2 * mode + 1, 2 * mode + 1) = std::cos(theta);
  return SymplecticOp(std::move(S));
}

SymplecticOp displacement_op(int modes, const Vec& d) {
  if (d.size() != 2 * modes) {
    throw std::invalid_argument("displacement_op: displacement has wrong length");
  }
  return SymplecticOp(Mat::Identity(2 * modes, 2 * modes), d);
}

SymplecticOp cz_shear(int modes, int mode_a, int mode_b) {
  if (mode_a == mode_b || mode_a < 0 || mode_b < 0 || mode_a >= modes || mode_b >= modes) {
    throw std::invalid_argument("cz_shear: invalid mode pair");
  }
  Mat S = Mat::Identity(2 * modes, 2 * modes);
  S(2 * mode_a + 1, 2 * mode_b) = -1.0;
  S(2 * mode_b + 1, 2 * mode_a) = -1.0;
  return SymplecticOp(std::move(S));
}

SymplecticOp compose(const SymplecticOp& second, const SymplecticOp& first) {
  return SymplecticOp(second.S * first.S, second.S * first.d + second.d);
}

GaussianState tensor_product(const GaussianState& a, const GaussianState& b) {
  const int modes = a.modes + b.modes;
  Vec mean = Vec::Zero(2 * modes);
  mean.head(2 * a.modes) = a.mean;
  mean.tail(2 * b.modes) = b.mean;
  Mat cov = Mat::Zero(2 * modes, 2 * modes);
  cov.topLeftCorner(2 * a.modes, 2 * a.modes) = a.cov;
  cov.bottomRightCorner(2 * b.modes, 2 * b.modes) = b.cov;
  return GaussianState(modes, std::move(mean), std::move(cov));
}

GaussianState permute_modes(const GaussianState& state, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != state.modes) {
    throw std::invalid_argument("permute_modes: permutation has wrong length");
  }
  const int dim = 2 * state.modes;
  Mat P = Mat::Zero(dim, dim);
  std::vector<bool> seen(state.modes, false);
  for (int i = 0; i < state.modes; ++i) {
    const int src = perm[i];
    if (src < 0 || src >= state.modes || seen[src]) {
      throw std::invalid_argument("permute_modes: not a permutation");
    }
    seen[src] = true;
    P(2 * i, 2 * src) = 1.0;
    P(2 * i + 1, 2 * src + 1) = 1.0;
  }
  return GaussianState(state.modes, P * state.mean, P * state.cov * P.transpose());
}

GaussianChannel identity_channel(int modes) {
  return GaussianChannel(Mat::Identity(2 * modes, 2 * modes),
                         Mat::Zero(2 * modes, 2 * modes), Vec::Zero(2 * modes));
}

GaussianChannel quantum_limited_amplifier(double x) {
  if (x < 1.0) {
    throw std::invalid_argument("quantum_limited_amplifier: gain must be >= 1");
  }
  return GaussianChannel(x * Mat::Identity(2, 2),
                         0.5 * (x * x - 1.0) * Mat::Identity(2, 2));
}

GaussianChannel pure_loss(double x) {
  if (x < 0.0 || x > 1.0) {
    throw std::invalid_argument("pure_loss: transmission must be in [0, 1]");
  }
  return GaussianChannel(x * Mat::Identity(2, 2),
                         0.5 * (1.0 - x * x) * Mat::Identity(2, 2));
}

GaussianChannel replace_with_vacuum(int modes) {
  return GaussianChannel(Mat::Zero(2 * modes, 2 * modes),
                         0.5 * Mat::Identity(2 * modes, 2 * modes),
                         Vec::Zero(2 * modes));
}

GaussianChannel channel_from_symplectic(const SymplecticOp& op) {
  return GaussianChannel(op.S, Mat::Zero(op.S.rows(), op.S.cols()), op.d);
}

GaussianChannel add_noise(const GaussianChannel& ch, double y) {
  if (y < 0.0) {
    throw std::invalid_argument("add_noise: noise must be nonnegative");
  }
  return GaussianChannel(ch.X, ch.Y + y * Mat::Identity(ch.Y.rows(), ch.Y.cols()),
                         ch.shift);
}

GaussianChannel compose_channels(const GaussianChannel& second,
                                 const GaussianChannel& first) {
  if (second.modes() != first.modes()) {
    throw std::invalid_argument("compose_channels: mode count mismatch");
  }
  return GaussianChannel(second.X * first.X,
                         second.X * first.Y * second.X.transpose() + second.Y,
                         second.X * first.shift + second.shift);
}

GaussianChannel embed_channel(const GaussianChannel& ch, int total) {
  const int inner = ch.modes();
  if (inner > total) {
    throw std::invalid_argument("embed_channel: channel larger than target");
  }
  const int dim = 2 * total;
  Mat X = Mat::Identity(dim, dim);
  Mat Y = Mat::Zero(dim, dim);
  Vec shift = Vec::Zero(dim);
  X.topLeftCorner(2 * inner, 2 * inner) = ch.X;
  Y.topLeftCorner(2 * inner, 2 * inner) = ch.Y;
  shift.head(2 * inner) = ch.shift;
  return GaussianChannel(std::move(X), std::move(Y), std::move(shift));
}

GaussianChannel optimal_amplifier_channel(double lambda, double g) {
  if (!(g >= lambda + 1.0)) {
    throw std::invalid_argument(
        "optimal_amplifier_channel: requires g >= lambda + 1");
  }
  return quantum_limited_amplifier(g / (lambda + 1.0));
}

GaussianChannel optimal_attenuator_channel(double g) {
  if (!(g <= 1.0)) {
    throw std::invalid_argument("optimal_attenuator_channel: requires g <= 1");
  }
  return pure_loss(g);
}

}  // namespace cvverify
