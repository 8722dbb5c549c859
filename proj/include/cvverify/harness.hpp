#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cvverify/planner.hpp"
#include "cvverify/protocol.hpp"
#include "cvverify/provers.hpp"
#include "cvverify/witness.hpp"

namespace cvverify {

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// 95% Wilson score interval for a bounded-in-[0,1] mean with `successes`
/// (possibly fractional) out of `trials`.
WilsonInterval wilson_interval(double successes, double trials);

struct ExperimentConfig {
  RunPlan plan;
  bool channel_task = false;
  TargetSpec target = GaussianTarget{identity_op(1)};
  WitnessKind kind;
  nlohmann::json prover_spec;
  std::int64_t trials = 1;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct ExperimentReport {
  std::int64_t trials = 0;
  std::uint64_t master_seed = 0;
  double accept_rate = 0.0;
  WilsonInterval accept_interval;
  /// Mean of accept * (1 - product of kept ground-truth fidelities).
  double soundness_value = 0.0;
  WilsonInterval soundness_interval;
  std::int64_t dimension_failures = 0;
  std::int64_t fidelity_failures = 0;
  std::int64_t accepts = 0;
  double mean_witness_value = 0.0;
  double witness_value_stddev = 0.0;
  std::int64_t witness_trials = 0;
  std::int64_t total_measurements = 0;
  double max_leakage = 0.0;
  std::vector<std::string> flags;
  nlohmann::json bounds;       // planner bound evaluation for the plan, when defined
  nlohmann::json prover_spec;  // echoed
  double wall_seconds = 0.0;   // not serialized unless timing is requested
};

/// Runs `trials` independent sessions with per-trial streams derived from
/// the master seed by a counter split; results do not depend on the thread
/// count.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Same engine with intent checks: completeness wants an honest prover,
/// soundness a prover exposing ground truth (all of ours do).
ExperimentReport estimate_completeness(const ExperimentConfig& cfg);
ExperimentReport estimate_soundness(const ExperimentConfig& cfg);

// --- concentration validation ---

struct TailValidationRow {
  std::string name;  // serfling_upper | serfling_lower | lemma1
  std::int64_t sample_k = 0;
  std::int64_t complement_n = 0;
  double delta = 0.0;      // serfling only
  std::int64_t r = 0;      // lemma1 only
  std::int64_t q = 0;      // lemma1 only
  int d0 = 0;              // lemma1 only
  std::int64_t trials = 0;
  std::int64_t conditioned_trials = 0;  // lemma1: runs where sum z <= R fired
  double empirical = 0.0;
  double bound = 0.0;
  bool bound_clamped = false;
  double three_sigma = 0.0;
  bool violation = false;
};

struct ConcentrationValidationReport {
  std::vector<TailValidationRow> rows;
  std::int64_t violations = 0;
};

/// Both Serfling tails over the documented (n, k, delta) grid with random
/// compositions and random splits.
ConcentrationValidationReport validate_serfling(std::uint64_t seed,
                                                std::int64_t populations_per_cell = 10000);

/// Two-measurement counting experiment on permutation-invariant diagonal
/// single-mode states, against the counting tail bound.
ConcentrationValidationReport validate_lemma1(std::uint64_t seed,
                                              std::int64_t repetitions_per_cell = 1000);

// --- planner sweep ---

struct SweepCell {
  int k = 0;
  std::int64_t m = 0;
  double epsilon = 0.0;
  int d0 = 0;
  std::string N;  // decimal strings: theorem-scale values exceed 64 bits
  std::string L;
  std::string R;
  std::string total_registers;
  double ln_total = 0.0;
  double soundness_total = 0.0;
  double completeness_deficit = 0.0;
  bool in_regime = false;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  /// Least-squares slope of ln(total_registers) against ln(1/epsilon) per
  /// (k, m) group with >= 2 epsilon points.
  struct Fit {
    int k = 0;
    std::int64_t m = 0;
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
  };
  std::vector<Fit> fits;
};

SweepReport sweep(const std::vector<int>& ks, const std::vector<std::int64_t>& ms,
                  const std::vector<double>& epsilons);

/// Default epsilon grid for the exponent check; small enough that the
/// polylogarithmic factors stop polluting the local slope.
std::vector<double> default_exponent_grid();

// --- Fock convergence ---

struct ConvergenceRow {
  std::string statistic;
  int cutoff = 0;
  double value_at_cutoff = 0.0;
  double value_at_double = 0.0;
  double drift = 0.0;
  double leakage = 0.0;
  double drift_budget = 0.0;  // leakage scaled by the observable window norm
  bool pass = false;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool all_pass = true;
};

/// Repeats second-moment statistics at D and 2D for the Fock-path states
/// and compares drift against the leakage-based budget.
ConvergenceReport fock_convergence(int cutoff, double xi,
                                   const std::vector<std::vector<int>>& edges, int modes);

int resolve_thread_count(int requested);

}  // namespace cvverify
