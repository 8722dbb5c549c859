#include "cvverify/provers.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace cvverify {

using nlohmann::json;

namespace {

void expect_keys(const json& obj, const std::vector<std::string>& allowed,
                 const std::string& where) {
  if (!obj.is_object()) {
    throw std::invalid_argument(where + ": expected an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
    }
  }
}

std::shared_ptr<const GaussianState> gaussian_target_state(const GaussianTarget& t) {
  return std::make_shared<GaussianState>(
      apply_symplectic(make_vacuum(t.modes()), t.op));
}

RegisterState honest_state(const TargetSpec& target) {
  RegisterState st;
  if (const auto* g = std::get_if<GaussianTarget>(&target)) {
    st.gaussian = gaussian_target_state(*g);
  } else {
    const auto& h = std::get<HypergraphTarget>(target);
    st.fock = std::make_shared<FockArray>(
        hypergraph_state(h.edges, h.xi, h.modes, h.cutoff));
  }
  return st;
}

/// Splits a product Gaussian state into per-mode single-mode states.
std::vector<GaussianState> factor_modes(const GaussianState& g) {
  std::vector<GaussianState> parts;
  for (int m = 0; m < g.modes; ++m) {
    for (int o = 0; o < g.modes; ++o) {
      if (o != m && g.cov.block<2, 2>(2 * m, 2 * o).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("prover: target state is not a mode product");
      }
    }
    parts.emplace_back(1, g.mean.segment<2>(2 * m), g.cov.block<2, 2>(2 * m, 2 * m));
  }
  return parts;
}

int auto_cutoff_for_level(int n) { return std::max(2, 2 * n + 40); }

class HonestProver final : public StateProver {
 public:
  explicit HonestProver(const TargetSpec& target) : state_(honest_state(target)) {}
  double fidelity_to_target(std::int64_t) override { return 1.0; }

 protected:
  RegisterState materialize(std::int64_t) override { return state_; }

 private:
  RegisterState state_;
};

class IidWrongProver final : public StateProver {
 public:
  IidWrongProver(const TargetSpec& target, const StateDescription& sigma)
      : state_(realize_description(sigma, target)),
        fidelity_(description_fidelity(sigma, target)) {}
  double fidelity_to_target(std::int64_t) override { return fidelity_; }

 protected:
  RegisterState materialize(std::int64_t) override { return state_; }

 private:
  RegisterState state_;
  double fidelity_;
};

class MixtureProver final : public StateProver {
 public:
  MixtureProver(const TargetSpec& target, std::vector<MixtureComponent> comps,
                std::int64_t total, RandomStream stream)
      : target_(target), comps_(std::move(comps)) {
    double wsum = 0.0;
    for (const auto& c : comps_) {
      if (c.weight < 0.0 || c.states.empty()) {
        throw std::invalid_argument("classical_mixture: bad component");
      }
      if (c.states.size() != 1 && static_cast<std::int64_t>(c.states.size()) != total) {
        throw std::invalid_argument(
            "classical_mixture: component list must have one entry or one per register");
      }
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) {
      throw std::invalid_argument("classical_mixture: weights must sum to 1");
    }
    // Commit before any selection: component draw, then the symmetrizing
    // permutation of its register list.
    double u = stream.uniform();
    component_ = comps_.size() - 1;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      u -= comps_[i].weight;
      if (u <= 0.0) {
        component_ = i;
        break;
      }
    }
    perm_.resize(total);
    std::iota(perm_.begin(), perm_.end(), 0);
    stream.shuffle(perm_);
    realized_.resize(comps_[component_].states.size());
    fidelities_.assign(realized_.size(), -1.0);
  }

  double fidelity_to_target(std::int64_t id) override {
    const std::size_t idx = slot(id);
    if (fidelities_[idx] < 0.0) {
      fidelities_[idx] =
          description_fidelity(comps_[component_].states[idx], target_);
    }
    return fidelities_[idx];
  }

 protected:
  RegisterState materialize(std::int64_t id) override {
    const std::size_t idx = slot(id);
    if (!realized_[idx].valid()) {
      realized_[idx] = realize_description(comps_[component_].states[idx], target_);
    }
    return realized_[idx];
  }

 private:
  std::size_t slot(std::int64_t id) const {
    const auto& states = comps_[component_].states;
    if (states.size() == 1) return 0;
    return static_cast<std::size_t>(perm_[static_cast<std::size_t>(id)]);
  }

  TargetSpec target_;
  std::vector<MixtureComponent> comps_;
  std::size_t component_ = 0;
  std::vector<std::int64_t> perm_;
  std::vector<RegisterState> realized_;
  std::vector<double> fidelities_;
};

class MarkovDriftProver final : public StateProver {
 public:
  MarkovDriftProver(const TargetSpec& target, double nbar_start, double step,
                    std::int64_t total, RandomStream stream) {
    const auto* g = std::get_if<GaussianTarget>(&target);
    if (!g) {
      throw std::invalid_argument("markov_drift: requires a Gaussian target");
    }
    target_state_ = gaussian_target_state(*g);
    if (g->modes() != 1) {
      throw std::invalid_argument("markov_drift: single-mode targets only");
    }
    nbar_.resize(total);
    double n = nbar_start;
    for (std::int64_t t = 0; t < total; ++t) {
      nbar_[t] = n;
      n += stream.bernoulli() ? step : -step;
      if (n < 0.0) {
        n = 0.0;
        if (!clipped_) {
          clipped_ = true;
          add_flag("drift_clipped_at_zero");
        }
      }
    }
  }

  double fidelity_to_target(std::int64_t id) override {
    return pure_state_fidelity(*target_state_, thermal(id));
  }

 protected:
  RegisterState materialize(std::int64_t id) override {
    RegisterState st;
    st.gaussian = std::make_shared<GaussianState>(thermal(id));
    return st;
  }

 private:
  GaussianState thermal(std::int64_t id) const {
    const double nu = 2.0 * nbar_.at(static_cast<std::size_t>(id)) + 1.0;
    return GaussianState(1, Vec::Zero(2), 0.5 * nu * Mat::Identity(2, 2));
  }

  std::shared_ptr<const GaussianState> target_state_;
  std::vector<double> nbar_;
  bool clipped_ = false;
};

class EnergySpikerProver final : public StateProver {
 public:
  EnergySpikerProver(const TargetSpec& target, double p, int level, RandomStream stream)
      : target_(target), honest_(honest_state(target)), p_(p), level_(level),
        stream_(std::move(stream)) {
    if (p < 0.0 || p > 1.0 || level < 0) {
      throw std::invalid_argument("energy_spiker: invalid parameters");
    }
    const int k = target_modes(target);
    const int cutoff = auto_cutoff_for_level(level);
    auto single = std::make_shared<FockArray>(
        FockArray::basis_state(1, cutoff, {level}));
    spike_.fock_product.assign(k, single);
    StateDescription d;
    d.family = "fock";
    d.fock_n = level;
    spike_fidelity_ = description_fidelity(d, target);
  }

  double fidelity_to_target(std::int64_t id) override {
    return is_spike(id) ? spike_fidelity_ : 1.0;
  }

 protected:
  RegisterState materialize(std::int64_t id) override {
    return is_spike(id) ? spike_ : honest_;
  }

 private:
  bool is_spike(std::int64_t id) {
    auto sub = stream_.child(static_cast<std::uint64_t>(id));
    return sub.bernoulli(p_);
  }

  TargetSpec target_;
  RegisterState honest_;
  RegisterState spike_;
  double p_;
  int level_;
  double spike_fidelity_ = 0.0;
  RandomStream stream_;
};

}  // namespace

void StateProver::add_flag(std::string flag) { flags_.push_back(std::move(flag)); }
void ChannelProver::add_flag(std::string flag) { flags_.push_back(std::move(flag)); }

std::unique_ptr<StateProver> honest_iid(const TargetSpec& target) {
  return std::make_unique<HonestProver>(target);
}

std::unique_ptr<StateProver> iid_wrong(const TargetSpec& target,
                                       const StateDescription& sigma) {
  return std::make_unique<IidWrongProver>(target, sigma);
}

std::unique_ptr<StateProver> classical_mixture(const TargetSpec& target,
                                               const std::vector<MixtureComponent>& comps,
                                               std::int64_t total_registers,
                                               RandomStream stream) {
  return std::make_unique<MixtureProver>(target, comps, total_registers,
                                         std::move(stream));
}

std::unique_ptr<StateProver> markov_drift(const TargetSpec& target, double nbar_start,
                                          double step, std::int64_t total_registers,
                                          RandomStream stream) {
  return std::make_unique<MarkovDriftProver>(target, nbar_start, step, total_registers,
                                             std::move(stream));
}

std::unique_ptr<StateProver> energy_spiker(const TargetSpec& target, double spike_prob,
                                           int spike_level, RandomStream stream) {
  return std::make_unique<EnergySpikerProver>(target, spike_prob, spike_level,
                                              std::move(stream));
}

RegisterState realize_description(const StateDescription& desc, const TargetSpec& target) {
  const int k = target_modes(target);
  RegisterState st;
  if (desc.family == "target") {
    return honest_state(target);
  }
  if (desc.family == "vacuum") {
    st.gaussian = std::make_shared<GaussianState>(make_vacuum(k));
    return st;
  }
  if (k != 1) {
    throw std::invalid_argument("state description '" + desc.family +
                                "' requires a single-mode target");
  }
  if (desc.family == "coherent") {
    Vec mean(2);
    mean << std::sqrt(2.0) * desc.alpha_re, std::sqrt(2.0) * desc.alpha_im;
    st.gaussian = std::make_shared<GaussianState>(1, mean, 0.5 * Mat::Identity(2, 2));
    return st;
  }
  if (desc.family == "thermal") {
    const double nu = 2.0 * desc.nbar + 1.0;
    st.gaussian = std::make_shared<GaussianState>(1, Vec::Zero(2),
                                                  0.5 * nu * Mat::Identity(2, 2));
    return st;
  }
  if (desc.family == "squeezed") {
    Mat cov(2, 2);
    cov << 0.5 * std::exp(2.0 * desc.xi), 0.0, 0.0, 0.5 * std::exp(-2.0 * desc.xi);
    st.gaussian = std::make_shared<GaussianState>(1, Vec::Zero(2), cov);
    return st;
  }
  if (desc.family == "fock") {
    const int cutoff = desc.cutoff > 0 ? desc.cutoff : auto_cutoff_for_level(desc.fock_n);
    st.fock = std::make_shared<FockArray>(
        FockArray::basis_state(1, cutoff, {desc.fock_n}));
    return st;
  }
  throw std::invalid_argument("unknown state description family '" + desc.family + "'");
}

double description_fidelity(const StateDescription& desc, const TargetSpec& target) {
  if (desc.family == "target") return 1.0;
  if (const auto* g = std::get_if<GaussianTarget>(&target)) {
    const auto target_state = gaussian_target_state(*g);
    if (desc.family == "fock") {
      // Product targets: per-mode overlap with |n>.
      const auto parts = factor_modes(*target_state);
      const int cutoff = std::max(desc.fock_n + 2, auto_cutoff_for_level(desc.fock_n));
      double f = 1.0;
      for (const auto& part : parts) {
        const FockArray mode = gaussian_to_fock(part, cutoff);
        f *= std::norm(mode.amplitudes(desc.fock_n));
      }
      return f;
    }
    const RegisterState actual = realize_description(desc, target);
    return pure_state_fidelity(*target_state, *actual.gaussian);
  }
  const auto& h = std::get<HypergraphTarget>(target);
  int cutoff = h.cutoff;
  if (desc.family == "fock") cutoff = std::max(cutoff, desc.fock_n + 1);
  const FockArray target_state = hypergraph_state(h.edges, h.xi, h.modes, cutoff);
  const RegisterState actual = realize_description(desc, target);
  if (actual.fock) {
    FockArray probe = *actual.fock;
    if (probe.cutoff != cutoff) {
      StateDescription resized = desc;
      resized.cutoff = cutoff;
      probe = *realize_description(resized, target).fock;
    }
    return fidelity(target_state, probe);
  }
  if (actual.gaussian) {
    const auto parts = factor_modes(*actual.gaussian);
    std::vector<std::shared_ptr<const FockArray>> fparts;
    for (const auto& part : parts) {
      fparts.push_back(std::make_shared<FockArray>(gaussian_to_fock(part, cutoff)));
    }
    CVec amp = CVec::Ones(1);
    for (const auto& p : fparts) {
      CVec next(amp.size() * p->amplitudes.size());
      for (long i = 0; i < amp.size(); ++i) {
        next.segment(i * p->amplitudes.size(), p->amplitudes.size()) =
            amp(i) * p->amplitudes;
      }
      amp = std::move(next);
    }
    const FockArray joint = FockArray::pure(h.modes, cutoff, std::move(amp));
    return fidelity(target_state, joint);
  }
  throw std::invalid_argument("description_fidelity: unsupported combination");
}

// --- channel provers ---

namespace {

class FixedChannelProver final : public ChannelProver {
 public:
  FixedChannelProver(const WitnessKind& kind, GaussianChannel ch)
      : kind_(kind), ch_(std::move(ch)), ratio_(channel_fbar_ratio(kind, ch_)) {}
  double fbar_ratio(std::int64_t) override { return ratio_; }

 protected:
  GaussianChannel materialize(std::int64_t) override { return ch_; }

 private:
  WitnessKind kind_;
  GaussianChannel ch_;
  double ratio_;
};

class DriftingChannelProver final : public ChannelProver {
 public:
  DriftingChannelProver(const WitnessKind& kind, double eta_start, double step,
                        std::int64_t total, RandomStream stream)
      : kind_(kind), ideal_(ideal_channel_for(kind)) {
    eta_.resize(total);
    double eta = eta_start;
    for (std::int64_t t = 0; t < total; ++t) {
      eta_[t] = eta;
      eta += stream.bernoulli() ? step : -step;
      if (eta > 1.0) {
        eta = 1.0;
        note_clip();
      }
      if (eta < 0.0) {
        eta = 0.0;
        note_clip();
      }
    }
    ratios_.assign(total, -1.0);
  }

  double fbar_ratio(std::int64_t id) override {
    auto& r = ratios_.at(static_cast<std::size_t>(id));
    if (r < 0.0) r = channel_fbar_ratio(kind_, peek(id));
    return r;
  }

 protected:
  GaussianChannel materialize(std::int64_t id) override {
    const double x = std::sqrt(eta_.at(static_cast<std::size_t>(id)));
    const int k = ideal_.modes();
    Mat X = x * Mat::Identity(2 * k, 2 * k);
    Mat Y = 0.5 * (1.0 - x * x) * Mat::Identity(2 * k, 2 * k);
    return compose_channels(GaussianChannel(std::move(X), std::move(Y)), ideal_);
  }

 private:
  void note_clip() {
    if (!clipped_) {
      clipped_ = true;
      add_flag("drift_clipped");
    }
  }
  WitnessKind kind_;
  GaussianChannel ideal_;
  std::vector<double> eta_;
  std::vector<double> ratios_;
  bool clipped_ = false;
};

}  // namespace

GaussianChannel ideal_channel_for(const WitnessKind& kind) {
  kind.validate();
  switch (kind.tag) {
    case WitnessTag::amplifier:
      if (kind.g < kind.lambda + 1.0) {
        throw std::domain_error(
            "ideal_channel_for: no Gaussian channel attains the amplification "
            "benchmark for g < lambda + 1");
      }
      return optimal_amplifier_channel(kind.lambda, kind.g);
    case WitnessTag::attenuator_or_storage:
      if (kind.g > 1.0) {
        throw std::domain_error(
            "ideal_channel_for: gains above 1 have no fidelity-1 channel");
      }
      return optimal_attenuator_channel(kind.g);
    case WitnessTag::memory_multimode:
      return identity_channel(kind.k);
    case WitnessTag::cz_gate: {
      const Mat T = kind.T ? *kind.T : [&] {
        Mat t = Mat::Identity(4, 4);
        t(1, 2) = 1.0;
        t(3, 0) = 1.0;
        return t;
      }();
      return channel_from_symplectic(SymplecticOp(T));
    }
    default:
      throw std::domain_error(
          "ideal_channel_for: the purification optimum is not a Gaussian channel");
  }
}

std::unique_ptr<ChannelProver> channel_prover_ideal(const WitnessKind& kind) {
  return std::make_unique<FixedChannelProver>(kind, ideal_channel_for(kind));
}

std::unique_ptr<ChannelProver> channel_prover_fixed(const WitnessKind& kind,
                                                    GaussianChannel ch) {
  return std::make_unique<FixedChannelProver>(kind, std::move(ch));
}

std::unique_ptr<ChannelProver> channel_prover_lossy(const WitnessKind& kind, double eta) {
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("channel_prover_lossy: eta must be in [0, 1]");
  }
  const GaussianChannel ideal = ideal_channel_for(kind);
  const int k = ideal.modes();
  const double x = std::sqrt(eta);
  Mat X = x * Mat::Identity(2 * k, 2 * k);
  Mat Y = 0.5 * (1.0 - x * x) * Mat::Identity(2 * k, 2 * k);
  return std::make_unique<FixedChannelProver>(
      kind, compose_channels(GaussianChannel(std::move(X), std::move(Y)), ideal));
}

std::unique_ptr<ChannelProver> channel_prover_noisy(const WitnessKind& kind, double y) {
  return std::make_unique<FixedChannelProver>(kind,
                                              add_noise(ideal_channel_for(kind), y));
}

std::unique_ptr<ChannelProver> channel_prover_replace_vacuum(const WitnessKind& kind) {
  return std::make_unique<FixedChannelProver>(kind, replace_with_vacuum(kind.k));
}

std::unique_ptr<ChannelProver> channel_prover_drifting(const WitnessKind& kind,
                                                       double eta_start, double step,
                                                       std::int64_t total_uses,
                                                       RandomStream stream) {
  return std::make_unique<DriftingChannelProver>(kind, eta_start, step, total_uses,
                                                 std::move(stream));
}

double multimode_average_fidelity(const GaussianChannel& ch, double lambda,
                                  const SymplecticOp& target) {
  const int k = ch.modes();
  if (target.modes() != k) {
    throw std::invalid_argument("multimode_average_fidelity: mode count mismatch");
  }
  const SymplecticOp inv = target.inverse();
  const Mat Xc = inv.S * ch.X * target.S;
  const Mat Yc = inv.S * ch.Y * inv.S.transpose();
  const Vec sc = inv.S * (ch.X * target.d + ch.shift - target.d);
  double f = 1.0;
  for (int m = 0; m < k; ++m) {
    for (int o = 0; o < k; ++o) {
      if (o != m && (Xc.block<2, 2>(2 * m, 2 * o).cwiseAbs().maxCoeff() > 1e-10 ||
                     Yc.block<2, 2>(2 * m, 2 * o).cwiseAbs().maxCoeff() > 1e-10)) {
        throw std::invalid_argument(
            "multimode_average_fidelity: conjugated channel does not act mode by mode");
      }
    }
    GaussianChannel mode(Xc.block<2, 2>(2 * m, 2 * m), Yc.block<2, 2>(2 * m, 2 * m),
                         sc.segment<2>(2 * m));
    f *= coherent_average_fidelity(mode, lambda, 1.0);
  }
  return f;
}

double purifier_average_fidelity(const GaussianChannel& ch, double lambda, double mu,
                                 double g) {
  if (ch.modes() != 1) {
    throw std::invalid_argument("purifier_average_fidelity: single-mode channel required");
  }
  const Mat I2 = Mat::Identity(2, 2);
  const Mat M = 0.5 * ch.X * ch.X.transpose() + ch.Y + 0.5 * I2;
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("purifier_average_fidelity: unphysical output covariance");
  }
  const Mat Mi = llt.solve(I2);
  const Mat C = ch.X - g * I2;
  Mat A(4, 4);
  A.topLeftCorner(2, 2) = lambda * I2 + C.transpose() * Mi * C;
  A.topRightCorner(2, 2) = C.transpose() * Mi * ch.X;
  A.bottomLeftCorner(2, 2) = ch.X.transpose() * Mi * C;
  A.bottomRightCorner(2, 2) = mu * I2 + ch.X.transpose() * Mi * ch.X;
  Eigen::LLT<Mat> lltA(A);
  if (lltA.info() != Eigen::Success) {
    throw std::domain_error("purifier_average_fidelity: divergent modulation integral");
  }
  Vec b(4);
  b.head(2) = C.transpose() * (Mi * ch.shift);
  b.tail(2) = ch.X.transpose() * (Mi * ch.shift);
  const double c = ch.shift.dot(Mi * ch.shift);
  const double quad = c - b.dot(lltA.solve(b));
  return lambda * mu / std::sqrt(M.determinant() * A.determinant()) *
         std::exp(-0.5 * quad);
}

double channel_fbar_ratio(const WitnessKind& kind, const GaussianChannel& ch) {
  double fbar = 0.0;
  switch (kind.tag) {
    case WitnessTag::amplifier:
    case WitnessTag::attenuator_or_storage:
      fbar = coherent_average_fidelity(ch, kind.lambda, kind.g);
      break;
    case WitnessTag::purifier_high_gain:
    case WitnessTag::purifier_low_gain:
      fbar = purifier_average_fidelity(ch, kind.lambda, kind.mu, kind.g);
      break;
    case WitnessTag::memory_multimode: {
      const SymplecticOp u = kind.target_op ? *kind.target_op : identity_op(kind.k);
      fbar = multimode_average_fidelity(ch, kind.lambda, u);
      break;
    }
    case WitnessTag::cz_gate: {
      const SymplecticOp u = kind.target_op ? *kind.target_op : identity_op(kind.k);
      Mat T = kind.T ? *kind.T : [&] {
        Mat t = Mat::Identity(4, 4);
        t(1, 2) = 1.0;
        t(3, 0) = 1.0;
        return t;
      }();
      const GaussianChannel undo = channel_from_symplectic(SymplecticOp(T.inverse()));
      fbar = multimode_average_fidelity(compose_channels(undo, ch), kind.lambda, u);
      break;
    }
    default:
      throw std::invalid_argument("channel_fbar_ratio: not a channel kind");
  }
  const double ratio = fbar / fbar_norm(kind);
  return std::min(1.0, std::max(0.0, ratio));
}

// --- JSON wiring ---

namespace {

StateDescription description_from_json(const json& j) {
  expect_keys(j, {"family", "alpha_re", "alpha_im", "nbar", "xi", "n", "cutoff"},
              "state description");
  StateDescription d;
  d.family = j.value("family", "vacuum");
  d.alpha_re = j.value("alpha_re", 0.0);
  d.alpha_im = j.value("alpha_im", 0.0);
  d.nbar = j.value("nbar", 0.0);
  d.xi = j.value("xi", 0.0);
  d.fock_n = j.value("n", 0);
  d.cutoff = j.value("cutoff", 0);
  return d;
}

}  // namespace

std::unique_ptr<StateProver> make_state_prover(const json& spec, const TargetSpec& target,
                                               const RunPlan& plan, RandomStream stream) {
  const std::string kind = spec.value("kind", "");
  if (kind == "honest_iid") {
    expect_keys(spec, {"kind"}, "prover");
    return honest_iid(target);
  }
  if (kind == "iid_wrong") {
    expect_keys(spec, {"kind", "state"}, "prover");
    return iid_wrong(target, description_from_json(spec.at("state")));
  }
  if (kind == "classical_mixture") {
    expect_keys(spec, {"kind", "components"}, "prover");
    std::vector<MixtureComponent> comps;
    for (const auto& cj : spec.at("components")) {
      expect_keys(cj, {"weight", "state", "states"}, "mixture component");
      MixtureComponent c;
      c.weight = cj.at("weight").get<double>();
      if (cj.contains("state")) {
        c.states.push_back(description_from_json(cj.at("state")));
      } else {
        for (const auto& sj : cj.at("states")) {
          c.states.push_back(description_from_json(sj));
        }
      }
      comps.push_back(std::move(c));
    }
    return classical_mixture(target, comps, plan.total_registers, std::move(stream));
  }
  if (kind == "markov_drift") {
    expect_keys(spec, {"kind", "nbar_start", "step"}, "prover");
    return markov_drift(target, spec.value("nbar_start", 0.0), spec.value("step", 0.01),
                        plan.total_registers, std::move(stream));
  }
  if (kind == "energy_spiker") {
    expect_keys(spec, {"kind", "p", "n"}, "prover");
    return energy_spiker(target, spec.at("p").get<double>(), spec.at("n").get<int>(),
                         std::move(stream));
  }
  throw std::invalid_argument("unknown state prover kind '" + kind + "'");
}

std::unique_ptr<ChannelProver> make_channel_prover(const json& spec,
                                                   const WitnessKind& kind,
                                                   const RunPlan& plan,
                                                   RandomStream stream) {
  const std::string pk = spec.value("kind", "");
  if (pk == "ideal") {
    expect_keys(spec, {"kind"}, "channel prover");
    return channel_prover_ideal(kind);
  }
  if (pk == "lossy") {
    expect_keys(spec, {"kind", "eta"}, "channel prover");
    return channel_prover_lossy(kind, spec.at("eta").get<double>());
  }
  if (pk == "noisy") {
    expect_keys(spec, {"kind", "y"}, "channel prover");
    return channel_prover_noisy(kind, spec.at("y").get<double>());
  }
  if (pk == "replace_with_vacuum") {
    expect_keys(spec, {"kind"}, "channel prover");
    return channel_prover_replace_vacuum(kind);
  }
  if (pk == "drifting") {
    expect_keys(spec, {"kind", "eta_start", "step"}, "channel prover");
    return channel_prover_drifting(kind, spec.value("eta_start", 1.0),
                                   spec.value("step", 0.01), plan.total_registers,
                                   std::move(stream));
  }
  throw std::invalid_argument("unknown channel prover kind '" + pk + "'");
}

}  // namespace cvverify
