#include "cvverify/protocol.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cvverify {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

FockArray kron_pure(const std::vector<std::shared_ptr<const FockArray>>& parts) {
  if (parts.empty()) {
    throw std::invalid_argument("kron_pure: empty product");
  }
  const int cutoff = parts.front()->cutoff;
  int modes = 0;
  CVec amp = CVec::Ones(1);
  double kept = 1.0;
  for (const auto& p : parts) {
    if (!p->is_pure() || p->cutoff != cutoff) {
      throw std::invalid_argument("kron_pure: modes must be pure with equal cutoffs");
    }
    modes += p->modes;
    CVec next(amp.size() * p->amplitudes.size());
    for (long i = 0; i < amp.size(); ++i) {
      next.segment(i * p->amplitudes.size(), p->amplitudes.size()) =
          amp(i) * p->amplitudes;
    }
    amp = std::move(next);
    kept *= 1.0 - p->leakage;
  }
  return FockArray::pure(modes, cutoff, std::move(amp), 1.0 - kept);
}

LinearObservable rotated_unit_quadrature(int modes, int j, double theta_prime) {
  Vec coeffs = Vec::Zero(2 * modes);
  coeffs(2 * (j - 1)) = std::cos(theta_prime);
  coeffs(2 * (j - 1) + 1) = std::sin(theta_prime);
  return LinearObservable(std::move(coeffs), 0.0);
}

}  // namespace

RoleAssignment assign_roles(const RunPlan& plan, RandomStream& rng) {
  const std::int64_t total = plan.total_registers;
  std::vector<std::int64_t> ids(total);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids);
  RoleAssignment roles;
  auto take = [&ids](std::int64_t from, std::int64_t count) {
    return std::vector<std::int64_t>(ids.begin() + from, ids.begin() + from + count);
  };
  const std::int64_t K = plan.K;
  const std::int64_t discard = plan.N - plan.L;
  roles.dimension_ids = take(0, K);
  roles.discarded_ids = take(K, discard);
  roles.fidelity_ids = take(K + discard, plan.L - plan.m);
  roles.kept_ids = take(K + discard + plan.L - plan.m, plan.m);
  return roles;
}

MeasurementEngine::MeasurementEngine(TargetSpec target, double)
    : target_(std::move(target)) {}

const FockArray& MeasurementEngine::base_frame(
    const std::shared_ptr<const FockArray>& state) {
  auto it = base_frame_cache_.find(state.get());
  if (it != base_frame_cache_.end()) return *it->second;
  const auto& h = std::get<HypergraphTarget>(target_);
  auto frame = std::make_shared<FockArray>(*state);
  for (const auto& edge : h.edges) {
    apply_cz_exponential(*frame, edge, +1.0);
  }
  const CMat unsqueeze = squeezer_matrix(-h.xi, state->cutoff);
  for (int mode = 1; mode <= frame->modes; ++mode) {
    apply_single_mode(*frame, unsqueeze, mode);
  }
  it = base_frame_cache_.emplace(state.get(), std::move(frame)).first;
  return *it->second;
}

std::shared_ptr<const FockArray> MeasurementEngine::joint_of(const RegisterState& state) {
  const auto& h = std::get<HypergraphTarget>(target_);
  if (state.fock) return state.fock;
  if (!state.fock_product.empty()) {
    return std::make_shared<FockArray>(kron_pure(state.fock_product));
  }
  auto it = joint_cache_.find(state.gaussian.get());
  if (it != joint_cache_.end()) return it->second;
  // Product Gaussian states convert mode by mode.
  const GaussianState& g = *state.gaussian;
  std::vector<std::shared_ptr<const FockArray>> parts;
  for (int m = 0; m < g.modes; ++m) {
    for (int o = 0; o < g.modes; ++o) {
      if (o != m && g.cov.block<2, 2>(2 * m, 2 * o).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument(
            "measurement: entangled Gaussian provers are not representable against "
            "a hypergraph target");
      }
    }
    GaussianState mode(1, g.mean.segment<2>(2 * m), g.cov.block<2, 2>(2 * m, 2 * m));
    parts.push_back(std::make_shared<FockArray>(gaussian_to_fock(mode, h.cutoff)));
  }
  auto joint = std::make_shared<FockArray>(kron_pure(parts));
  joint_cache_.emplace(state.gaussian.get(), joint);
  return joint;
}

double MeasurementEngine::measure(const RegisterState& state, int j, double theta,
                                  Branch branch, RandomStream& rng) {
  if (!state.valid()) {
    throw std::invalid_argument("measure: register state has no representation");
  }
  const double theta_prime = theta + (branch == Branch::P ? kHalfPi : 0.0);

  if (std::holds_alternative<GaussianTarget>(target_)) {
    const auto obs =
        std::get<LinearObservable>(observable_for_target(target_, j, theta, branch));
    if (state.gaussian) {
      return sample_homodyne(*state.gaussian, obs, rng);
    }
    if (state.fock) {
      accumulated_leakage_ = std::max(accumulated_leakage_, state.fock->leakage);
      return sample_linear_on_fock(*state.fock, obs, rng);
    }
    // Product state, linear observable: per-mode outcomes add.
    double value = obs.offset;
    int mode_base = 0;
    for (const auto& part : state.fock_product) {
      accumulated_leakage_ = std::max(accumulated_leakage_, part->leakage);
      for (int m = 0; m < part->modes; ++m) {
        const double cq = obs.coeffs(2 * (mode_base + m));
        const double cp = obs.coeffs(2 * (mode_base + m) + 1);
        if (cq == 0.0 && cp == 0.0) continue;
        Vec local(2 * part->modes);
        local.setZero();
        local(2 * m) = cq;
        local(2 * m + 1) = cp;
        value += sample_linear_on_fock(*part, LinearObservable(std::move(local), 0.0), rng);
      }
      mode_base += part->modes;
    }
    return value;
  }

  // Hypergraph target: move to the frame in which the conjugated rotated
  // quadrature becomes a plain rotated quadrature of mode j.
  std::shared_ptr<const FockArray> joint = joint_of(state);
  accumulated_leakage_ = std::max(accumulated_leakage_, joint->leakage);
  const FockArray& frame = base_frame(joint);
  return sample_linear_on_fock(frame, rotated_unit_quadrature(frame.modes, j, theta_prime),
                               rng);
}

namespace {

struct StageRunner {
  const RunPlan& plan;
  RandomStream& rng;
  Transcript* transcript;

  template <typename Measure>
  bool dimension_stage(const std::vector<std::int64_t>& ids, Measure&& measure) {
    const std::int64_t per_group = plan.N / 2;
    const double threshold = 0.5 * plan.d0;
    for (int j = 1; j <= plan.k; ++j) {
      std::int64_t zcount = 0;
      for (std::int64_t l = 0; l < per_group; ++l) {
        const std::int64_t id = ids[(j - 1) * per_group + l];
        const double theta = rng.uniform(0.0, kHalfPi);
        const Branch branch = rng.bernoulli() ? Branch::Q : Branch::P;
        const double outcome = measure(id, j, theta, branch);
        const int z = (outcome * outcome > threshold) ? 1 : 0;
        if (transcript) {
          transcript->push_back({id, Stage::dimension, j, theta, branch, outcome, z});
        }
        zcount += z;
        if (zcount > plan.R) {
          return false;  // abort as soon as any group fails
        }
      }
    }
    return true;
  }

  template <typename Measure>
  std::vector<double> fidelity_stage(const std::vector<std::int64_t>& ids,
                                     Measure&& measure) {
    std::vector<double> chi;
    chi.reserve(ids.size());
    for (const std::int64_t id : ids) {
      const int j = 1 + static_cast<int>(rng.uniform_index(plan.k));
      const double theta = rng.uniform(0.0, kHalfPi);
      const Branch branch = rng.bernoulli() ? Branch::Q : Branch::P;
      const double outcome = measure(id, j, theta, branch);
      if (transcript) {
        transcript->push_back({id, Stage::fidelity, j, theta, branch, outcome, -1});
      }
      chi.push_back(outcome);
    }
    return chi;
  }
};

}  // namespace

Verdict run_state_verification(const RunPlan& plan, const TargetSpec& target,
                               StateProver& prover, RandomStream rng,
                               Transcript* transcript, RoleAssignment* roles_out,
                               double* max_leakage_out) {
  if (target_modes(target) != plan.k) {
    throw std::invalid_argument("run_state_verification: target mode count != plan k");
  }
  RoleAssignment roles = assign_roles(plan, rng);
  if (roles_out) *roles_out = roles;
  MeasurementEngine engine(target);
  StageRunner runner{plan, rng, transcript};

  auto measure = [&](std::int64_t id, int j, double theta, Branch branch) {
    const RegisterState st = prover.state_for(id);
    return engine.measure(st, j, theta, branch, rng);
  };

  Verdict verdict;
  verdict.dimension_pass = runner.dimension_stage(roles.dimension_ids, measure);
  if (!verdict.dimension_pass) {
    if (max_leakage_out) *max_leakage_out = engine.accumulated_leakage();
    return verdict;
  }
  const std::vector<double> chi = runner.fidelity_stage(roles.fidelity_ids, measure);
  verdict.witness = state_witness(chi, plan.k, plan.m, plan.epsilon);
  verdict.fidelity_pass = verdict.witness->pass;
  verdict.kept_ids = roles.kept_ids;
  if (max_leakage_out) *max_leakage_out = engine.accumulated_leakage();
  return verdict;
}

Verdict run_channel_verification(const RunPlan& plan, const WitnessKind& kind,
                                 ChannelProver& prover, RandomStream rng,
                                 Transcript* transcript, RoleAssignment* roles_out) {
  const ProbeSpec probe = probe_spec(kind);
  if (probe.k != plan.k) {
    throw std::invalid_argument("run_channel_verification: kind mode count != plan k");
  }
  RoleAssignment roles = assign_roles(plan, rng);
  if (roles_out) *roles_out = roles;
  StageRunner runner{plan, rng, transcript};

  auto measure = [&](std::int64_t id, int j, double theta, Branch branch) {
    const GaussianChannel ch = prover.channel_for(id);
    const GaussianState out = apply_channel(probe.input, embed_channel(ch, 2 * plan.k));
    double outcome = sample_homodyne(out, probe.observable(j, theta, branch), rng);
    if (probe.xi_offset_variance > 0.0) {
      const double xi = rng.normal(0.0, std::sqrt(probe.xi_offset_variance));
      outcome += probe.offset_coefficient(j, theta, branch) * xi;
    }
    return outcome;
  };

  Verdict verdict;
  verdict.dimension_pass = runner.dimension_stage(roles.dimension_ids, measure);
  if (!verdict.dimension_pass) {
    return verdict;
  }
  const std::vector<double> chi = runner.fidelity_stage(roles.fidelity_ids, measure);
  verdict.witness = channel_witness(kind, chi, plan.m, plan.epsilon);
  verdict.fidelity_pass = verdict.witness->pass;
  verdict.kept_ids = roles.kept_ids;
  return verdict;
}

Verdict replay_verdict(const RunPlan& plan, const Transcript& transcript,
                       const std::optional<WitnessKind>& kind) {
  Verdict verdict;
  std::vector<std::int64_t> zcounts(plan.k + 1, 0);
  std::vector<double> chi;
  std::int64_t dimension_records = 0;
  bool failed = false;
  const double threshold = 0.5 * plan.d0;
  for (const auto& rec : transcript) {
    if (rec.stage == Stage::dimension) {
      if (rec.group < 1 || rec.group > plan.k) {
        throw std::invalid_argument("replay_verdict: group index out of range");
      }
      ++dimension_records;
      const int z = (rec.outcome * rec.outcome > threshold) ? 1 : 0;
      zcounts[rec.group] += z;
      if (zcounts[rec.group] > plan.R) failed = true;
    } else {
      chi.push_back(rec.outcome);
    }
  }
  verdict.dimension_pass = !failed && dimension_records == plan.K;
  if (!verdict.dimension_pass) return verdict;
  verdict.witness = kind ? channel_witness(*kind, chi, plan.m, plan.epsilon)
                         : state_witness(chi, plan.k, plan.m, plan.epsilon);
  verdict.fidelity_pass = verdict.witness->pass;
  return verdict;
}

}  // namespace cvverify
