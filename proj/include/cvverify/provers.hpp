#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <unordered_map>
#include <vector>

#include "cvverify/fock.hpp"
#include "cvverify/phasespace.hpp"
#include "cvverify/planner.hpp"
#include "cvverify/witness.hpp"

namespace cvverify {

/// One register as handed over by a prover. Exactly one representation is
/// engaged: a Gaussian state, a joint Fock array, or a per-mode product of
/// single-mode Fock arrays (which sidesteps the joint-dimension cap).
struct RegisterState {
  std::shared_ptr<const GaussianState> gaussian;
  std::shared_ptr<const FockArray> fock;
  std::vector<std::shared_ptr<const FockArray>> fock_product;

  bool valid() const {
    return (gaussian != nullptr) + (fock != nullptr) + (!fock_product.empty()) == 1;
  }
};

/// A committed source of register states. States are a function of the
/// prover's seed and the register id only, so the verifier's selection
/// cannot influence what was prepared (non-signaling commitment).
class StateProver {
 public:
  virtual ~StateProver() = default;

  /// Called by the verifier only for registers it measures.
  RegisterState state_for(std::int64_t register_id) {
    sample_counts_[register_id] += 1;
    return materialize(register_id);
  }

  /// Ground-truth fidelity with the target; never influences the verdict.
  virtual double fidelity_to_target(std::int64_t register_id) = 0;

  /// Inspection access that bypasses the instrumentation counter.
  RegisterState peek(std::int64_t register_id) { return materialize(register_id); }

  const std::unordered_map<std::int64_t, std::int64_t>& sample_counts() const {
    return sample_counts_;
  }
  const std::vector<std::string>& flags() const { return flags_; }

 protected:
  virtual RegisterState materialize(std::int64_t register_id) = 0;
  void add_flag(std::string flag);
  std::vector<std::string> flags_;

 private:
  std::unordered_map<std::int64_t, std::int64_t> sample_counts_;
};

/// A committed source of channel uses.
class ChannelProver {
 public:
  virtual ~ChannelProver() = default;
  GaussianChannel channel_for(std::int64_t use_id) {
    sample_counts_[use_id] += 1;
    return materialize(use_id);
  }
  /// Ground-truth average-fidelity ratio Fbar(E_use)/Fbar_max in [0, 1].
  virtual double fbar_ratio(std::int64_t use_id) = 0;
  GaussianChannel peek(std::int64_t use_id) { return materialize(use_id); }
  const std::unordered_map<std::int64_t, std::int64_t>& sample_counts() const {
    return sample_counts_;
  }
  const std::vector<std::string>& flags() const { return flags_; }

 protected:
  virtual GaussianChannel materialize(std::int64_t use_id) = 0;
  void add_flag(std::string flag);
  std::vector<std::string> flags_;

 private:
  std::unordered_map<std::int64_t, std::int64_t> sample_counts_;
};

/// Realizes the target state itself (fidelity 1 everywhere).
std::unique_ptr<StateProver> honest_iid(const TargetSpec& target);

/// Single-mode state descriptions used by the wrong-state and mixture
/// provers: vacuum, coherent, thermal, squeezed, fock, or the target.
struct StateDescription {
  std::string family = "vacuum";
  double alpha_re = 0.0;
  double alpha_im = 0.0;
  double nbar = 0.0;
  double xi = 0.0;
  int fock_n = 0;
  int cutoff = 0;  // 0 = automatic
};

/// Same wrong state in every register.
std::unique_ptr<StateProver> iid_wrong(const TargetSpec& target,
                                       const StateDescription& sigma);

struct MixtureComponent {
  double weight = 0.0;
  std::vector<StateDescription> states;  // one entry = broadcast to all registers
};

/// Draws one component per run, then symmetrizes its register list by a
/// uniform random permutation.
std::unique_ptr<StateProver> classical_mixture(const TargetSpec& target,
                                               const std::vector<MixtureComponent>& comps,
                                               std::int64_t total_registers,
                                               RandomStream stream);

/// Hidden thermal-occupation random walk across the preparation sequence.
std::unique_ptr<StateProver> markov_drift(const TargetSpec& target, double nbar_start,
                                          double step, std::int64_t total_registers,
                                          RandomStream stream);

/// Target with probability 1-p, a high Fock level |n> per mode otherwise.
std::unique_ptr<StateProver> energy_spiker(const TargetSpec& target, double spike_prob,
                                           int spike_level, RandomStream stream);

// --- channel provers ---

/// The kind's optimal channel; throws when no Gaussian channel attains the
/// benchmark optimum (purifier kinds, gains strictly between 1 and the
/// witness regime boundary).
GaussianChannel ideal_channel_for(const WitnessKind& kind);

std::unique_ptr<ChannelProver> channel_prover_ideal(const WitnessKind& kind);
std::unique_ptr<ChannelProver> channel_prover_fixed(const WitnessKind& kind,
                                                    GaussianChannel ch);
std::unique_ptr<ChannelProver> channel_prover_lossy(const WitnessKind& kind, double eta);
std::unique_ptr<ChannelProver> channel_prover_noisy(const WitnessKind& kind, double y);
std::unique_ptr<ChannelProver> channel_prover_replace_vacuum(const WitnessKind& kind);
/// Per-use transmissivity random walk around the ideal channel.
std::unique_ptr<ChannelProver> channel_prover_drifting(const WitnessKind& kind,
                                                       double eta_start, double step,
                                                       std::int64_t total_uses,
                                                       RandomStream stream);

/// Average fidelity of a k-mode channel for the Gaussian-modulated ensemble
/// conjugated by `target` (identity gain); requires the conjugated channel
/// to act mode by mode.
double multimode_average_fidelity(const GaussianChannel& ch, double lambda,
                                  const SymplecticOp& target);

/// Purification benchmark value for a Gaussian channel: coherent signal
/// modulated at lambda, additive coherent noise modulated at mu, target
/// |g alpha>.
double purifier_average_fidelity(const GaussianChannel& ch, double lambda, double mu,
                                 double g);

/// Ground-truth Fbar(E)/Fbar_norm for a channel against a witness kind.
double channel_fbar_ratio(const WitnessKind& kind, const GaussianChannel& ch);

// --- JSON wiring (specs echoed into reports) ---

std::unique_ptr<StateProver> make_state_prover(const nlohmann::json& spec,
                                               const TargetSpec& target,
                                               const RunPlan& plan, RandomStream stream);
std::unique_ptr<ChannelProver> make_channel_prover(const nlohmann::json& spec,
                                                   const WitnessKind& kind,
                                                   const RunPlan& plan,
                                                   RandomStream stream);

/// Realizes a description against a target's mode count; single-mode
/// families require a single-mode target.
RegisterState realize_description(const StateDescription& desc, const TargetSpec& target);
double description_fidelity(const StateDescription& desc, const TargetSpec& target);

}  // namespace cvverify
