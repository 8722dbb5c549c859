#include "cvverify/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cvverify {

using nlohmann::json;

void require_keys(const json& obj, const std::vector<std::string>& allowed,
                  const std::string& path) {
  if (!obj.is_object()) {
    throw std::invalid_argument(path + ": expected an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw std::invalid_argument("config error at " + path + ": unknown key '" +
                                  it.key() + "'");
    }
  }
}

json plan_to_json(const VerificationPlan& plan) {
  const BoundReport sb = soundness_bound(plan);
  const BoundReport cb = completeness_bound(plan);
  json flags = json::array();
  for (const auto& f : plan.flags) flags.push_back(f);
  for (const auto& f : sb.flags) flags.push_back(f);
  for (const auto& f : cb.flags) flags.push_back(f);
  return json{{"schema", kReportSchemaVersion},
              {"k", plan.k},
              {"m", plan.m},
              {"epsilon", plan.epsilon},
              {"d0", plan.d0},
              {"N", plan.N.str()},
              {"K", plan.K.str()},
              {"R", plan.R.str()},
              {"L", plan.L.str()},
              {"Q", plan.Q.str()},
              {"total_registers", plan.total_registers.str()},
              {"soundness_terms", sb.soundness_terms},
              {"soundness_total", sb.soundness_total},
              {"completeness_terms", cb.completeness_terms},
              {"completeness_deficit", cb.completeness_deficit},
              {"flags", flags}};
}

json experiment_report_to_json(const ExperimentReport& report, bool with_timing) {
  json j{{"schema", kReportSchemaVersion},
         {"trials", report.trials},
         {"seed", report.master_seed},
         {"accept_rate", report.accept_rate},
         {"accept_interval", {report.accept_interval.lo, report.accept_interval.hi}},
         {"soundness_value", report.soundness_value},
         {"soundness_interval",
          {report.soundness_interval.lo, report.soundness_interval.hi}},
         {"stage_counts",
          {{"accepted", report.accepts},
           {"dimension_failures", report.dimension_failures},
           {"fidelity_failures", report.fidelity_failures}}},
         {"mean_witness_value", report.mean_witness_value},
         {"witness_value_stddev", report.witness_value_stddev},
         {"witness_trials", report.witness_trials},
         {"total_measurements", report.total_measurements},
         {"max_leakage", report.max_leakage},
         {"bounds", report.bounds},
         {"prover", report.prover_spec},
         {"flags", report.flags}};
  if (with_timing) {
    j["wall_seconds"] = report.wall_seconds;
  }
  return j;
}

json concentration_report_to_json(const ConcentrationValidationReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"name", r.name},
             {"sample_k", r.sample_k},
             {"complement_n", r.complement_n},
             {"trials", r.trials},
             {"conditioned_trials", r.conditioned_trials},
             {"empirical", r.empirical},
             {"bound", r.bound},
             {"bound_clamped", r.bound_clamped},
             {"three_sigma", r.three_sigma},
             {"violation", r.violation}};
    if (r.name == "lemma1") {
      row["R"] = r.r;
      row["Q"] = r.q;
      row["d0"] = r.d0;
    } else {
      row["delta"] = r.delta;
    }
    rows.push_back(row);
  }
  return json{{"schema", kReportSchemaVersion},
              {"rows", rows},
              {"violations", report.violations}};
}

json sweep_report_to_json(const SweepReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back(json{{"k", c.k},
                         {"m", c.m},
                         {"epsilon", c.epsilon},
                         {"d0", c.d0},
                         {"N", c.N},
                         {"L", c.L},
                         {"R", c.R},
                         {"total_registers", c.total_registers},
                         {"ln_total", c.ln_total},
                         {"soundness_total", c.soundness_total},
                         {"completeness_deficit", c.completeness_deficit},
                         {"in_regime", c.in_regime}});
  }
  json fits = json::array();
  for (const auto& f : report.fits) {
    fits.push_back(json{{"k", f.k},
                        {"m", f.m},
                        {"slope_vs_inverse_epsilon", f.slope},
                        {"intercept", f.intercept},
                        {"points", f.points}});
  }
  return json{{"schema", kReportSchemaVersion}, {"cells", cells}, {"fits", fits}};
}

std::string sweep_report_to_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "k,m,epsilon,d0,N,L,R,total_registers,ln_total,soundness_total,"
         "completeness_deficit,in_regime\n";
  out.precision(17);
  for (const auto& c : report.cells) {
    out << c.k << ',' << c.m << ',' << c.epsilon << ',' << c.d0 << ',' << c.N << ','
        << c.L << ',' << c.R << ',' << c.total_registers << ',' << c.ln_total << ','
        << c.soundness_total << ',' << c.completeness_deficit << ','
        << (c.in_regime ? 1 : 0) << '\n';
  }
  return out.str();
}

json convergence_report_to_json(const ConvergenceReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back(json{{"statistic", r.statistic},
                        {"cutoff", r.cutoff},
                        {"value_at_cutoff", r.value_at_cutoff},
                        {"value_at_double", r.value_at_double},
                        {"drift", r.drift},
                        {"leakage", r.leakage},
                        {"drift_budget", r.drift_budget},
                        {"pass", r.pass}});
  }
  return json{{"schema", kReportSchemaVersion},
              {"rows", rows},
              {"all_pass", report.all_pass}};
}

json transcript_record_to_json(const TranscriptRecord& rec) {
  return json{{"register", rec.register_id},
              {"group", rec.group},
              {"theta", rec.theta},
              {"branch", rec.branch == Branch::Q ? "q" : "p"},
              {"outcome", rec.outcome},
              {"flag", rec.z < 0 ? "chi" : (rec.z == 0 ? "z0" : "z1")}};
}

std::string transcript_to_jsonl(const Transcript& transcript) {
  std::ostringstream out;
  for (const auto& rec : transcript) {
    out << transcript_record_to_json(rec).dump() << '\n';
  }
  return out.str();
}

Transcript transcript_from_jsonl(const std::string& text) {
  Transcript transcript;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TranscriptRecord rec;
    rec.register_id = j.at("register").get<std::int64_t>();
    rec.group = j.at("group").get<int>();
    rec.theta = j.at("theta").get<double>();
    rec.branch = j.at("branch").get<std::string>() == "q" ? Branch::Q : Branch::P;
    rec.outcome = j.at("outcome").get<double>();
    const std::string flag = j.at("flag").get<std::string>();
    rec.z = flag == "chi" ? -1 : (flag == "z1" ? 1 : 0);
    rec.stage = flag == "chi" ? Stage::fidelity : Stage::dimension;
    transcript.push_back(rec);
  }
  return transcript;
}

RunPlan run_plan_from_json(const json& j) {
  require_keys(j, {"k", "m", "epsilon", "d0", "N", "L"}, "plan");
  for (const char* key : {"k", "m", "epsilon", "d0", "N", "L"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("config error at plan: missing key '") +
                                  key + "'");
    }
  }
  return desk_plan(j.at("k").get<int>(), j.at("m").get<std::int64_t>(),
                   j.at("epsilon").get<double>(), j.at("d0").get<int>(),
                   j.at("N").get<std::int64_t>(), j.at("L").get<std::int64_t>());
}

namespace {

SymplecticOp symplectic_from_json(const json& j, const std::string& path) {
  require_keys(j, {"S", "d"}, path);
  const auto rows = j.at("S").get<std::vector<std::vector<double>>>();
  const int dim = static_cast<int>(rows.size());
  Mat S(dim, dim);
  for (int r = 0; r < dim; ++r) {
    if (static_cast<int>(rows[r].size()) != dim) {
      throw std::invalid_argument(path + ": S must be square");
    }
    for (int c = 0; c < dim; ++c) S(r, c) = rows[r][c];
  }
  Vec d = Vec::Zero(dim);
  if (j.contains("d") && !j.at("d").empty()) {
    const auto dv = j.at("d").get<std::vector<double>>();
    if (static_cast<int>(dv.size()) != dim) {
      throw std::invalid_argument(path + ": d has wrong length");
    }
    for (int i = 0; i < dim; ++i) d(i) = dv[i];
  }
  return SymplecticOp(std::move(S), std::move(d));
}

}  // namespace

TargetSpec target_from_json(const json& j) {
  const std::string kind = j.value("kind", "");
  if (kind == "vacuum") {
    require_keys(j, {"kind", "modes"}, "target");
    return GaussianTarget{identity_op(j.value("modes", 1))};
  }
  if (kind == "gaussian") {
    require_keys(j, {"kind", "S", "d"}, "target");
    return GaussianTarget{symplectic_from_json(j, "target")};
  }
  if (kind == "hypergraph") {
    require_keys(j, {"kind", "modes", "xi", "edges", "cutoff"}, "target");
    HypergraphTarget h;
    h.modes = j.at("modes").get<int>();
    h.xi = j.at("xi").get<double>();
    h.edges = j.at("edges").get<std::vector<std::vector<int>>>();
    h.cutoff = j.at("cutoff").get<int>();
    return h;
  }
  throw std::invalid_argument("config error at target: unknown kind '" + kind + "'");
}

WitnessKind witness_kind_from_json(const json& j) {
  WitnessKind kind;
  const std::string tag = j.value("kind", "");
  if (tag == "amplifier") {
    require_keys(j, {"kind", "lambda", "g"}, "witness");
    kind.tag = WitnessTag::amplifier;
  } else if (tag == "attenuator_or_storage" || tag == "storage" || tag == "attenuator") {
    require_keys(j, {"kind", "lambda", "g"}, "witness");
    kind.tag = WitnessTag::attenuator_or_storage;
  } else if (tag == "purifier") {
    require_keys(j, {"kind", "lambda", "g", "mu"}, "witness");
    kind.mu = j.at("mu").get<double>();
    kind.tag = purifier_regime(j.at("lambda").get<double>(), j.at("g").get<double>(),
                               kind.mu);
  } else if (tag == "memory") {
    require_keys(j, {"kind", "lambda", "k", "S", "d"}, "witness");
    kind.tag = WitnessTag::memory_multimode;
    kind.k = j.value("k", 1);
    if (j.contains("S")) {
      kind.target_op = symplectic_from_json(json{{"S", j.at("S")},
                                                 {"d", j.value("d", json::array())}},
                                            "witness");
    }
  } else if (tag == "cz_gate") {
    require_keys(j, {"kind", "lambda", "k"}, "witness");
    kind.tag = WitnessTag::cz_gate;
    kind.k = j.value("k", 2);
  } else {
    throw std::invalid_argument("config error at witness: unknown kind '" + tag + "'");
  }
  kind.lambda = j.value("lambda", 1.0);
  kind.g = j.value("g", 1.0);
  if (kind.k < 1) throw std::invalid_argument("config error at witness: k must be >= 1");
  kind.validate();
  return kind;
}

ParsedRunConfig run_config_from_json(const json& j, bool channel_task) {
  require_keys(j,
               {"plan", "target", "witness", "prover", "trials", "seed", "threads"},
               "config");
  ParsedRunConfig parsed;
  parsed.experiment.plan = run_plan_from_json(j.at("plan"));
  parsed.experiment.channel_task = channel_task;
  if (channel_task) {
    parsed.experiment.kind = witness_kind_from_json(j.at("witness"));
    if (j.contains("target")) {
      throw std::invalid_argument("config error: channel runs take 'witness', not 'target'");
    }
  } else {
    parsed.experiment.target = target_from_json(j.at("target"));
    if (j.contains("witness")) {
      throw std::invalid_argument("config error: state runs take 'target', not 'witness'");
    }
  }
  parsed.experiment.prover_spec = j.at("prover");
  parsed.experiment.trials = j.value("trials", static_cast<std::int64_t>(1));
  if (j.contains("seed")) {
    parsed.experiment.master_seed = j.at("seed").get<std::uint64_t>();
    parsed.seed_was_explicit = true;
  }
  parsed.experiment.threads = j.value("threads", 1);
  return parsed;
}

std::string render_report(const json& j) { return j.dump(2) + "\n"; }

void emit_report(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("emit_report: cannot open '" + path + "' for writing");
  }
  out << render_report(j);
  if (!out) {
    throw std::runtime_error("emit_report: write to '" + path + "' failed");
  }
}

}  // namespace cvverify
