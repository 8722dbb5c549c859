#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cvverify/planner.hpp"
#include "cvverify/provers.hpp"
#include "cvverify/witness.hpp"

namespace cvverify {

enum class Stage { dimension, fidelity };

struct TranscriptRecord {
  std::int64_t register_id = 0;
  Stage stage = Stage::dimension;
  int group = 0;  // dimension-test group, or the chosen j in the fidelity stage
  double theta = 0.0;
  Branch branch = Branch::Q;
  double outcome = 0.0;
  int z = -1;  // 0/1 threshold flag in the dimension stage, -1 for chi records
};

using Transcript = std::vector<TranscriptRecord>;

struct Verdict {
  bool dimension_pass = false;
  std::optional<bool> fidelity_pass;
  std::optional<WitnessEstimate> witness;
  std::vector<std::int64_t> kept_ids;

  bool accept() const {
    return dimension_pass && fidelity_pass.has_value() && *fidelity_pass;
  }
};

/// Register roles drawn as one uniform permutation of all ids: the first
/// kN/2 feed the dimension test (group j gets the j-th slice of N/2), then
/// N-L discarded, L-m fidelity-test, m kept.
struct RoleAssignment {
  std::vector<std::int64_t> dimension_ids;
  std::vector<std::int64_t> discarded_ids;
  std::vector<std::int64_t> fidelity_ids;
  std::vector<std::int64_t> kept_ids;
};

RoleAssignment assign_roles(const RunPlan& plan, RandomStream& rng);

/// Samples the outcome of measuring one register with the target's rotated
/// observable; dispatches between the phase-space and Fock engines.
class MeasurementEngine {
 public:
  MeasurementEngine(TargetSpec target, double leakage_budget = 0.0);
  double measure(const RegisterState& state, int j, double theta, Branch branch,
                 RandomStream& rng);
  double accumulated_leakage() const { return accumulated_leakage_; }

 private:
  const FockArray& base_frame(const std::shared_ptr<const FockArray>& state);
  std::shared_ptr<const FockArray> joint_of(const RegisterState& state);

  TargetSpec target_;
  double accumulated_leakage_ = 0.0;
  std::unordered_map<const void*, std::shared_ptr<const FockArray>> base_frame_cache_;
  std::unordered_map<const void*, std::shared_ptr<const FockArray>> joint_cache_;
};

/// Full state-verification pipeline on a committed prover. The transcript,
/// when requested, records every measurement in order.
Verdict run_state_verification(const RunPlan& plan, const TargetSpec& target,
                               StateProver& prover, RandomStream rng,
                               Transcript* transcript = nullptr,
                               RoleAssignment* roles_out = nullptr,
                               double* max_leakage_out = nullptr);

/// Channel verification: per tested use the verifier prepares the probe,
/// feeds the first half into the use, and measures the joint rotated
/// observable on (output, reference).
Verdict run_channel_verification(const RunPlan& plan, const WitnessKind& kind,
                                 ChannelProver& prover, RandomStream rng,
                                 Transcript* transcript = nullptr,
                                 RoleAssignment* roles_out = nullptr);

/// Recomputes the verdict from a recorded transcript; measurement-derived
/// fields reproduce the original run exactly. Pass the witness kind for
/// channel transcripts.
Verdict replay_verdict(const RunPlan& plan, const Transcript& transcript,
                       const std::optional<WitnessKind>& kind = std::nullopt);

}  // namespace cvverify
