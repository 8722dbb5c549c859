#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "cvverify/harness.hpp"
#include "cvverify/planner.hpp"
#include "cvverify/protocol.hpp"

namespace cvverify {

inline constexpr int kReportSchemaVersion = 1;

/// Strict helper: rejects keys outside `allowed` with a path diagnostic.
void require_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                  const std::string& path);

nlohmann::json plan_to_json(const VerificationPlan& plan);

nlohmann::json experiment_report_to_json(const ExperimentReport& report,
                                         bool with_timing = false);

nlohmann::json concentration_report_to_json(const ConcentrationValidationReport& report);

nlohmann::json sweep_report_to_json(const SweepReport& report);
std::string sweep_report_to_csv(const SweepReport& report);

nlohmann::json convergence_report_to_json(const ConvergenceReport& report);

nlohmann::json transcript_record_to_json(const TranscriptRecord& rec);
std::string transcript_to_jsonl(const Transcript& transcript);
Transcript transcript_from_jsonl(const std::string& text);

/// Parses the "plan" block of a run config (desk overrides allowed; regime
/// violations become flags on the plan).
RunPlan run_plan_from_json(const nlohmann::json& j);
TargetSpec target_from_json(const nlohmann::json& j);
WitnessKind witness_kind_from_json(const nlohmann::json& j);

struct ParsedRunConfig {
  ExperimentConfig experiment;
  bool seed_was_explicit = false;
};

/// Full verify-state / verify-channel config file.
ParsedRunConfig run_config_from_json(const nlohmann::json& j, bool channel_task);

/// Pretty JSON with a trailing newline; doubles round-trip exactly.
std::string render_report(const nlohmann::json& j);
void emit_report(const nlohmann::json& j, const std::string& path);

}  // namespace cvverify
