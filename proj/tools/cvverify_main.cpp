#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <string>

#include "cvverify/harness.hpp"
#include "cvverify/planner.hpp"
#include "cvverify/report.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitConfigError = 2;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + path + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_out(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << cvverify::render_report(report);
  } else {
    cvverify::emit_report(report, out_path);
  }
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct VerifyArgs {
  std::string config_path;
  std::string out_path;
  std::int64_t trials = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool timing = false;
};

int run_verify(const VerifyArgs& args, bool channel_task) {
  cvverify::ParsedRunConfig parsed =
      cvverify::run_config_from_json(load_config(args.config_path), channel_task);
  if (args.trials >= 1) parsed.experiment.trials = args.trials;
  if (args.seed_set) {
    parsed.experiment.master_seed = args.seed;
  } else if (!parsed.seed_was_explicit) {
    parsed.experiment.master_seed = entropy_seed();
  }
  if (args.threads >= 1) parsed.experiment.threads = args.threads;

  const cvverify::ExperimentReport report = cvverify::run_experiment(parsed.experiment);
  write_out(cvverify::experiment_report_to_json(report, args.timing), args.out_path);
  if (parsed.experiment.trials == 1 && report.accepts == 0) {
    return kExitReject;
  }
  return kExitOk;
}

int run_selftest() {
  using namespace cvverify;
  // A fast invariant sweep: planner worked example, witness saturation,
  // homodyne moments, and a small deterministic protocol run.
  {
    const BigInt L = compute_L(1, 1, 0.1, 10);
    if (L != BigInt("9738643")) {
      std::cerr << "selftest: L(1,1,0.1,d0=10) mismatch\n";
      return 1;
    }
  }
  {
    const GaussianState vac = make_vacuum(1);
    RandomStream rng(7);
    LinearObservable q{(Vec(2) << 1.0, 0.0).finished(), 0.0};
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_homodyne(vac, q, rng);
      sum += x;
      sum2 += x * x;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    if (std::abs(var - 0.5) > 0.03) {
      std::cerr << "selftest: vacuum homodyne variance off: " << var << "\n";
      return 1;
    }
  }
  {
    const TargetSpec target = GaussianTarget{identity_op(1)};
    const double w = witness_expectation_oracle(target, make_vacuum(1));
    if (std::abs(w - 1.0) > 1e-12) {
      std::cerr << "selftest: witness saturation failed\n";
      return 1;
    }
  }
  {
    const RunPlan plan = desk_plan(1, 1, 0.2, 20, 200, 60);
    ExperimentConfig cfg;
    cfg.plan = plan;
    cfg.target = GaussianTarget{identity_op(1)};
    cfg.prover_spec = json{{"kind", "honest_iid"}};
    cfg.trials = 20;
    cfg.master_seed = 11;
    const ExperimentReport rep = run_experiment(cfg);
    if (rep.accept_rate < 0.8) {
      std::cerr << "selftest: honest desk run accept rate " << rep.accept_rate << "\n";
      return 1;
    }
  }
  std::cout << "selftest: ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cvverify: verification planner and Monte Carlo simulator for "
               "continuous-variable states and channels"};
  app.require_subcommand(1);

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Solve the protocol parameters");
  int plan_k = 1;
  std::int64_t plan_m = 1;
  double plan_eps = 0.1;
  std::string plan_out;
  plan_cmd->add_option("--k", plan_k, "modes per register")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--m", plan_m, "registers to keep")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--epsilon", plan_eps, "failure tolerance in (0, 1/2)");
  plan_cmd->add_option("--out", plan_out, "output path (default: stdout)");

  // verify-state / verify-channel
  VerifyArgs vs, vc;
  auto add_verify_opts = [](CLI::App* cmd, VerifyArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", args.out_path, "output path (default: stdout)");
    cmd->add_option("--trials", args.trials, "override trial count");
    cmd->add_option("--seed", args.seed, "master seed (echoed into the report)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker threads (capped by CVVERIFY_THREADS)");
    cmd->add_flag("--timing", args.timing, "include wall-clock time in the report");
  };
  auto* vs_cmd = app.add_subcommand("verify-state", "Run state verification trials");
  add_verify_opts(vs_cmd, vs);
  auto* vc_cmd = app.add_subcommand("verify-channel", "Run channel verification trials");
  add_verify_opts(vc_cmd, vc);

  // validate-bounds
  auto* vb_cmd = app.add_subcommand("validate-bounds",
                                    "Empirical validation of the tail bounds");
  std::uint64_t vb_seed = 2024;
  std::int64_t vb_pops = 10000;
  std::int64_t vb_reps = 1000;
  std::string vb_out;
  vb_cmd->add_option("--seed", vb_seed, "master seed");
  vb_cmd->add_option("--populations", vb_pops, "populations per Serfling cell");
  vb_cmd->add_option("--repetitions", vb_reps, "repetitions per counting cell");
  vb_cmd->add_option("--out", vb_out, "output path (default: stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Planner parameter sweep");
  std::string sweep_config, sweep_out, sweep_csv;
  sweep_cmd->add_option("--config", sweep_config,
                        "grid config {k:[],m:[],epsilon:[]} (default: exponent grid)");
  sweep_cmd->add_option("--out", sweep_out, "JSON output path (default: stdout)");
  sweep_cmd->add_option("--csv", sweep_csv, "also write the table as CSV");

  // selftest
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the quick invariant subset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (plan_cmd->parsed()) {
      const cvverify::VerificationPlan plan = cvverify::make_plan(plan_k, plan_m, plan_eps);
      write_out(cvverify::plan_to_json(plan), plan_out);
      return kExitOk;
    }
    if (vs_cmd->parsed()) {
      return run_verify(vs, false);
    }
    if (vc_cmd->parsed()) {
      return run_verify(vc, true);
    }
    if (vb_cmd->parsed()) {
      const auto serfling = cvverify::validate_serfling(vb_seed, vb_pops);
      const auto lemma1 = cvverify::validate_lemma1(vb_seed + 1, vb_reps);
      json out{{"schema", cvverify::kReportSchemaVersion},
               {"seed", vb_seed},
               {"serfling", cvverify::concentration_report_to_json(serfling)},
               {"lemma1", cvverify::concentration_report_to_json(lemma1)}};
      write_out(out, vb_out);
      return (serfling.violations == 0 && lemma1.violations == 0) ? kExitOk : kExitReject;
    }
    if (sweep_cmd->parsed()) {
      std::vector<int> ks = {1};
      std::vector<std::int64_t> ms = {1};
      std::vector<double> eps = cvverify::default_exponent_grid();
      if (!sweep_config.empty()) {
        const json grid = load_config(sweep_config);
        cvverify::require_keys(grid, {"k", "m", "epsilon"}, "sweep config");
        if (grid.contains("k")) ks = grid.at("k").get<std::vector<int>>();
        if (grid.contains("m")) ms = grid.at("m").get<std::vector<std::int64_t>>();
        if (grid.contains("epsilon")) eps = grid.at("epsilon").get<std::vector<double>>();
      }
      const auto report = cvverify::sweep(ks, ms, eps);
      if (!sweep_csv.empty()) {
        std::ofstream csv(sweep_csv);
        if (!csv) {
          throw std::runtime_error("cannot open '" + sweep_csv + "' for writing");
        }
        csv << cvverify::sweep_report_to_csv(report);
      }
      write_out(cvverify::sweep_report_to_json(report), sweep_out);
      return kExitOk;
    }
    if (selftest_cmd->parsed()) {
      return run_selftest();
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
