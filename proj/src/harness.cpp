#include "cvverify/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace cvverify {

WilsonInterval wilson_interval(double successes, double trials) {
  if (trials < 1.0) {
    return {0.0, 1.0};
  }
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double p = successes / trials;
  const double denom = 1.0 + z2 / trials;
  const double center = (p + z2 / (2.0 * trials)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

int resolve_thread_count(int requested) {
  if (const char* env = std::getenv("CVVERIFY_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) requested = std::min(requested < 1 ? cap : requested, cap);
  }
  if (requested < 1) requested = 1;
  return requested;
}

namespace {

struct TrialResult {
  bool accept = false;
  bool dimension_failed = false;
  bool fidelity_failed = false;
  bool has_witness = false;
  double witness_value = 0.0;
  double soundness_contrib = 0.0;
  std::int64_t measurements = 0;
  double max_leakage = 0.0;
  std::vector<std::string> flags;
};

double kept_infidelity_state(StateProver& prover, const std::vector<std::int64_t>& kept) {
  double log_prod = 0.0;
  for (const std::int64_t id : kept) {
    const double f = prover.fidelity_to_target(id);
    if (f <= 0.0) return 1.0;
    log_prod += std::log(std::min(1.0, f));
  }
  return -std::expm1(log_prod);
}

double kept_infidelity_channel(ChannelProver& prover,
                               const std::vector<std::int64_t>& kept) {
  double log_prod = 0.0;
  for (const std::int64_t id : kept) {
    const double f = prover.fbar_ratio(id);
    if (f <= 0.0) return 1.0;
    log_prod += std::log(std::min(1.0, f));
  }
  return -std::expm1(log_prod);
}

TrialResult run_one_trial(const ExperimentConfig& cfg, std::int64_t trial) {
  const RandomStream root(cfg.master_seed);
  RandomStream verifier_rng = root.child(2 * static_cast<std::uint64_t>(trial));
  RandomStream prover_rng = root.child(2 * static_cast<std::uint64_t>(trial) + 1);

  TrialResult res;
  RoleAssignment roles;
  if (!cfg.channel_task) {
    auto prover = make_state_prover(cfg.prover_spec, cfg.target, cfg.plan,
                                    std::move(prover_rng));
    const Verdict v =
        run_state_verification(cfg.plan, cfg.target, *prover, std::move(verifier_rng),
                               nullptr, &roles, &res.max_leakage);
    const double leakage_budget = 0.1 * cfg.plan.epsilon / (2.0 * cfg.plan.m);
    if (res.max_leakage > leakage_budget) {
      throw std::runtime_error(
          "run_experiment: accumulated truncation leakage exceeds the budget for "
          "this plan's fidelity tolerance");
    }
    res.accept = v.accept();
    res.dimension_failed = !v.dimension_pass;
    res.fidelity_failed = v.dimension_pass && !res.accept;
    if (v.witness) {
      res.has_witness = true;
      res.witness_value = v.witness->value;
    }
    if (res.accept) {
      res.soundness_contrib = kept_infidelity_state(*prover, v.kept_ids);
    }
    for (const auto& [id, count] : prover->sample_counts()) {
      res.measurements += count;
      if (std::find(roles.kept_ids.begin(), roles.kept_ids.end(), id) !=
          roles.kept_ids.end()) {
        res.flags.push_back("kept_register_sampled");
      }
    }
    res.flags.insert(res.flags.end(), prover->flags().begin(), prover->flags().end());
  } else {
    auto prover = make_channel_prover(cfg.prover_spec, cfg.kind, cfg.plan,
                                      std::move(prover_rng));
    const Verdict v = run_channel_verification(cfg.plan, cfg.kind, *prover,
                                               std::move(verifier_rng), nullptr, &roles);
    res.accept = v.accept();
    res.dimension_failed = !v.dimension_pass;
    res.fidelity_failed = v.dimension_pass && !res.accept;
    if (v.witness) {
      res.has_witness = true;
      res.witness_value = v.witness->value;
    }
    if (res.accept) {
      res.soundness_contrib = kept_infidelity_channel(*prover, v.kept_ids);
    }
    for (const auto& [id, count] : prover->sample_counts()) {
      res.measurements += count;
      if (std::find(roles.kept_ids.begin(), roles.kept_ids.end(), id) !=
          roles.kept_ids.end()) {
        res.flags.push_back("kept_use_sampled");
      }
    }
    res.flags.insert(res.flags.end(), prover->flags().begin(), prover->flags().end());
  }
  return res;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) {
    throw std::invalid_argument("run_experiment: trials must be >= 1");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const int threads = resolve_thread_count(cfg.threads);
  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));

  auto worker = [&](int w) {
    for (std::int64_t t = w; t < cfg.trials; t += threads) {
      results[static_cast<std::size_t>(t)] = run_one_trial(cfg, t);
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  ExperimentReport rep;
  rep.trials = cfg.trials;
  rep.master_seed = cfg.master_seed;
  rep.prover_spec = cfg.prover_spec;
  double soundness_sum = 0.0;
  double witness_sum = 0.0;
  double witness_sq = 0.0;
  std::vector<std::string> flag_pool;
  for (const auto& r : results) {
    rep.accepts += r.accept ? 1 : 0;
    rep.dimension_failures += r.dimension_failed ? 1 : 0;
    rep.fidelity_failures += r.fidelity_failed ? 1 : 0;
    soundness_sum += r.soundness_contrib;
    if (r.has_witness) {
      rep.witness_trials += 1;
      witness_sum += r.witness_value;
      witness_sq += r.witness_value * r.witness_value;
    }
    rep.total_measurements += r.measurements;
    rep.max_leakage = std::max(rep.max_leakage, r.max_leakage);
    flag_pool.insert(flag_pool.end(), r.flags.begin(), r.flags.end());
  }
  rep.accept_rate = static_cast<double>(rep.accepts) / cfg.trials;
  rep.accept_interval = wilson_interval(static_cast<double>(rep.accepts),
                                        static_cast<double>(cfg.trials));
  rep.soundness_value = soundness_sum / cfg.trials;
  rep.soundness_interval =
      wilson_interval(soundness_sum, static_cast<double>(cfg.trials));
  if (rep.witness_trials > 0) {
    rep.mean_witness_value = witness_sum / rep.witness_trials;
    const double var = witness_sq / rep.witness_trials -
                       rep.mean_witness_value * rep.mean_witness_value;
    rep.witness_value_stddev = std::sqrt(std::max(0.0, var));
  }
  std::sort(flag_pool.begin(), flag_pool.end());
  flag_pool.erase(std::unique(flag_pool.begin(), flag_pool.end()), flag_pool.end());
  rep.flags = cfg.plan.flags;
  rep.flags.insert(rep.flags.end(), flag_pool.begin(), flag_pool.end());
  std::sort(rep.flags.begin(), rep.flags.end());
  rep.flags.erase(std::unique(rep.flags.begin(), rep.flags.end()), rep.flags.end());

  try {
    const VerificationPlan plan = assemble_plan(cfg.plan.k, cfg.plan.m, cfg.plan.epsilon,
                                                cfg.plan.d0, BigInt(cfg.plan.N),
                                                BigInt(cfg.plan.L));
    const BoundReport sb = soundness_bound(plan);
    const BoundReport cb = completeness_bound(plan);
    rep.bounds = nlohmann::json{
        {"soundness_terms", sb.soundness_terms},
        {"soundness_total", sb.soundness_total},
        {"completeness_terms", cb.completeness_terms},
        {"completeness_deficit", cb.completeness_deficit},
    };
  } catch (const std::exception& e) {
    rep.bounds = nlohmann::json{{"undefined", e.what()}};
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

ExperimentReport estimate_completeness(const ExperimentConfig& cfg) {
  if (cfg.prover_spec.value("kind", "") != "honest_iid" &&
      cfg.prover_spec.value("kind", "") != "ideal") {
    throw std::invalid_argument("estimate_completeness: requires the honest prover");
  }
  return run_experiment(cfg);
}

ExperimentReport estimate_soundness(const ExperimentConfig& cfg) {
  return run_experiment(cfg);
}

// --- Serfling validation ---

ConcentrationValidationReport validate_serfling(std::uint64_t seed,
                                                std::int64_t populations_per_cell) {
  ConcentrationValidationReport report;
  RandomStream root(seed);
  const std::vector<std::pair<std::int64_t, std::int64_t>> sizes = {
      {100, 100}, {60, 300}, {300, 60}};  // (sample k, complement n)
  const std::vector<double> deltas = {0.05, 0.1, 0.2};
  std::uint64_t cell_tag = 0;
  for (const auto& [k, n] : sizes) {
    for (const double delta : deltas) {
      RandomStream rng = root.child(cell_tag++);
      std::int64_t upper_hits = 0;
      std::int64_t lower_hits = 0;
      std::vector<int> bits(static_cast<std::size_t>(n + k));
      for (std::int64_t t = 0; t < populations_per_cell; ++t) {
        const std::int64_t ones = static_cast<std::int64_t>(
            rng.uniform_index(static_cast<std::uint64_t>(n + k + 1)));
        std::fill(bits.begin(), bits.end(), 0);
        for (std::int64_t i = 0; i < ones; ++i) bits[static_cast<std::size_t>(i)] = 1;
        rng.shuffle(bits);
        std::int64_t sample_sum = 0;
        for (std::int64_t i = 0; i < k; ++i) sample_sum += bits[static_cast<std::size_t>(i)];
        const std::int64_t rest_sum = ones - sample_sum;
        const double sample_mean = static_cast<double>(sample_sum) / k;
        const double rest_mean = static_cast<double>(rest_sum) / n;
        if (rest_mean >= sample_mean + delta) ++upper_hits;
        if (rest_mean <= sample_mean - delta) ++lower_hits;
      }
      for (int tail = 0; tail < 2; ++tail) {
        TailValidationRow row;
        row.name = tail == 0 ? "serfling_upper" : "serfling_lower";
        row.sample_k = k;
        row.complement_n = n;
        row.delta = delta;
        row.trials = populations_per_cell;
        row.conditioned_trials = populations_per_cell;
        row.empirical = static_cast<double>(tail == 0 ? upper_hits : lower_hits) /
                        populations_per_cell;
        const ConcentrationResult b =
            tail == 0 ? serfling_upper(k, n, delta) : serfling_lower(k, n, delta);
        row.bound = b.value;
        row.bound_clamped = b.clamped;
        row.three_sigma =
            3.0 * std::sqrt(std::max(1e-12, b.value * (1.0 - b.value)) /
                            populations_per_cell);
        row.violation = row.empirical > row.bound + row.three_sigma;
        if (row.violation) ++report.violations;
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

// --- counting-lemma validation ---

namespace {

/// Outcome distributions for the threshold measurement (random q or p
/// homodyne, z = outcome^2 > d0/2) and the level measurement (y = level >=
/// d0) on a fixed single-mode pure state.
struct DiagonalStateModel {
  double z_prob = 0.0;
  double y_prob = 0.0;
};

DiagonalStateModel model_for(const FockArray& state, int d0) {
  DiagonalStateModel m;
  const auto& basis = quadrature_basis(state.cutoff);
  // q and p thresholds agree for the states used here (real amplitudes up
  // to phases); evaluate both explicitly anyway.
  for (int which = 0; which < 2; ++which) {
    FockArray work = state;
    if (which == 1) {
      CMat phase = CMat::Zero(state.cutoff, state.cutoff);
      for (int n = 0; n < state.cutoff; ++n) {
        phase(n, n) = std::exp(std::complex<double>(0.0, -1.5707963267948966 * n));
      }
      apply_single_mode(work, phase, 1);
    }
    CVec pos = basis.V.transpose().cast<std::complex<double>>() * work.amplitudes;
    double p = 0.0;
    for (int i = 0; i < state.cutoff; ++i) {
      if (basis.nodes(i) * basis.nodes(i) > 0.5 * d0) p += std::norm(pos(i));
    }
    m.z_prob += 0.5 * p;
  }
  for (int n = d0; n < state.cutoff; ++n) {
    m.y_prob += std::norm(state.amplitudes(n));
  }
  return m;
}

}  // namespace

ConcentrationValidationReport validate_lemma1(std::uint64_t seed,
                                              std::int64_t repetitions_per_cell) {
  ConcentrationValidationReport report;
  RandomStream root(seed);
  const int cutoff = 14;
  const int d0 = 10;
  const FockArray vacuum = FockArray::basis_state(1, cutoff, {0});
  const FockArray spike = FockArray::basis_state(1, cutoff, {d0 + 1});
  const DiagonalStateModel mv = model_for(vacuum, d0);
  const DiagonalStateModel ms = model_for(spike, d0);

  struct Cell {
    std::int64_t kp, n, r, q;
    double frac_a, frac_b, mix_prob;  // per-run spike fraction: b w.p. mix_prob
  };
  // The first cells have a non-vacuous bound; the small cells exercise the
  // clamped regime; mixed cells are correlated (non-i.i.d) populations.
  const std::vector<Cell> cells = {
      {5000, 10000, 10, 2200, 0.0, 0.0, 0.0},
      {5000, 10000, 10, 2200, 2e-4, 2e-4, 0.0},
      {5000, 10000, 10, 2200, 0.0, 0.05, 0.5},
      {60, 120, 2, 30, 0.0, 0.0, 0.0},
      {60, 120, 2, 30, 5e-3, 0.2, 0.3},
  };
  std::uint64_t tag = 1000;
  for (const auto& cell : cells) {
    RandomStream rng = root.child(tag++);
    std::int64_t conditioned = 0;
    std::int64_t hits = 0;
    for (std::int64_t rep = 0; rep < repetitions_per_cell; ++rep) {
      // Permutation-invariant preparation: a per-run component draw followed
      // by independent per-register spikes (a mixture of i.i.d laws is
      // permutation invariant; the random split adds the sampling symmetry).
      const double fraction = rng.uniform() < cell.mix_prob ? cell.frac_b : cell.frac_a;
      std::int64_t zsum = 0;
      for (std::int64_t i = 0; i < cell.kp; ++i) {
        const bool is_spike = rng.uniform() < fraction;
        const double zp = is_spike ? ms.z_prob : mv.z_prob;
        zsum += rng.uniform() < zp ? 1 : 0;
      }
      if (zsum > cell.r) continue;
      ++conditioned;
      std::int64_t ysum = 0;
      for (std::int64_t i = 0; i < cell.n; ++i) {
        const bool is_spike = rng.uniform() < fraction;
        const double yp = is_spike ? ms.y_prob : mv.y_prob;
        ysum += rng.uniform() < yp ? 1 : 0;
      }
      if (ysum > cell.q) ++hits;
    }
    TailValidationRow row;
    row.name = "lemma1";
    row.sample_k = cell.kp;
    row.complement_n = cell.n;
    row.r = cell.r;
    row.q = cell.q;
    row.d0 = d0;
    row.trials = repetitions_per_cell;
    row.conditioned_trials = conditioned;
    row.empirical = conditioned > 0 ? static_cast<double>(hits) / conditioned : 0.0;
    const ConcentrationResult b = lemma1_bound(cell.kp, cell.n, cell.r, cell.q);
    row.bound = b.value;
    row.bound_clamped = b.clamped;
    row.three_sigma = conditioned > 0
                          ? 3.0 * std::sqrt(std::max(1e-12, b.value * (1.0 - b.value)) /
                                            conditioned)
                          : 0.0;
    row.violation = conditioned > 0 && row.empirical > row.bound + row.three_sigma;
    if (row.violation) ++report.violations;
    report.rows.push_back(row);
  }
  return report;
}

// --- planner sweep ---

SweepReport sweep(const std::vector<int>& ks, const std::vector<std::int64_t>& ms,
                  const std::vector<double>& epsilons) {
  SweepReport report;
  for (const int k : ks) {
    for (const std::int64_t m : ms) {
      std::vector<std::pair<double, double>> points;  // (ln 1/eps, ln total)
      for (const double eps : epsilons) {
        const VerificationPlan plan = make_plan(k, m, eps);
        SweepCell cell;
        cell.k = k;
        cell.m = m;
        cell.epsilon = eps;
        cell.d0 = plan.d0;
        cell.N = plan.N.str();
        cell.L = plan.L.str();
        cell.R = plan.R.str();
        cell.total_registers = plan.total_registers.str();
        cell.ln_total =
            boost::multiprecision::log(BigFloat(plan.total_registers)).convert_to<double>();
        cell.soundness_total = soundness_bound(plan).soundness_total;
        cell.completeness_deficit = completeness_bound(plan).completeness_deficit;
        cell.in_regime = plan.theorem_regime();
        report.cells.push_back(cell);
        if (cell.in_regime) {
          points.emplace_back(std::log(1.0 / eps), cell.ln_total);
        }
      }
      if (points.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [x, y] : points) {
          sx += x;
          sy += y;
          sxx += x * x;
          sxy += x * y;
        }
        const double n = static_cast<double>(points.size());
        SweepReport::Fit fit;
        fit.k = k;
        fit.m = m;
        fit.points = static_cast<int>(points.size());
        fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        fit.intercept = (sy - fit.slope * sx) / n;
        report.fits.push_back(fit);
      }
    }
  }
  return report;
}

std::vector<double> default_exponent_grid() {
  return {1e-4, 3.16e-5, 1e-5, 3.16e-6, 1e-6, 3.16e-7, 1e-7};
}

// --- Fock convergence ---

namespace {

ConvergenceRow second_moment_row(const std::string& name, const FockArray& at_d,
                                 const FockArray& at_2d,
                                 const PolynomialObservable& obs, double window_norm) {
  ConvergenceRow row;
  row.statistic = name;
  row.cutoff = at_d.cutoff;
  row.value_at_cutoff = expectation(at_d, obs);
  row.value_at_double = expectation(at_2d, obs);
  row.drift = std::abs(row.value_at_double - row.value_at_cutoff);
  row.leakage = at_d.leakage;
  row.drift_budget = std::max(at_d.leakage * window_norm, 1e-12);
  row.pass = row.drift <= row.drift_budget;
  return row;
}

}  // namespace

ConvergenceReport fock_convergence(int cutoff, double xi,
                                   const std::vector<std::vector<int>>& edges,
                                   int modes) {
  ConvergenceReport report;
  const FockArray at_d = hypergraph_state(edges, xi, modes, cutoff);
  const FockArray at_2d = hypergraph_state(edges, xi, modes, 2 * cutoff);
  // The drift budget scales the truncation weight by the observable's norm
  // over the doubled window, since a raw probability weight cannot bound an
  // unbounded observable's shift by itself.
  const double window = 2.0 * (2.0 * cutoff) + 1.0;
  for (int j = 1; j <= modes; ++j) {
    PolynomialObservable q2;
    q2.terms.push_back({1.0, {{j, QuadKind::Q, 2}}});
    report.rows.push_back(
        second_moment_row("q" + std::to_string(j) + "_second_moment", at_d, at_2d, q2,
                          window));
    PolynomialObservable p2;
    p2.terms.push_back({1.0, {{j, QuadKind::P, 2}}});
    report.rows.push_back(
        second_moment_row("p" + std::to_string(j) + "_second_moment", at_d, at_2d, p2,
                          window));
  }
  for (const auto& row : report.rows) {
    report.all_pass = report.all_pass && row.pass;
  }
  return report;
}

}  // namespace cvverify
