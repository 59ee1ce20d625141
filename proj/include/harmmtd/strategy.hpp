#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "harmmtd/cloud.hpp"
#include "harmmtd/harm.hpp"
#include "harmmtd/metrics.hpp"

namespace harmmtd {

enum class StrategyKind { LiveMigrate, Patch };

std::string_view to_string(StrategyKind kind) noexcept;

/// A single defensive response. LiveMigrate names a destination host, Patch
/// names the CVE to remove.
struct Strategy {
  StrategyKind kind = StrategyKind::LiveMigrate;
  std::string vm_id;
  std::string dest_host;  // LiveMigrate only
  std::string cve_id;     // Patch only

  static Strategy live_migrate(std::string vm_id, std::string dest_host);
  static Strategy patch(std::string vm_id, std::string cve_id);

  /// Tie-break order: LiveMigrate first, then vm_id, then dest_host / cve_id.
  bool precedes(const Strategy& other) const noexcept;

  bool operator==(const Strategy&) const = default;
};

nlohmann::json to_json(const Strategy& s);
/// Throws Error(InvalidScenario) on a malformed or inconsistent record.
Strategy strategy_from_json(const nlohmann::json& j);

/// Apply the strategy through cloud-sim.
CloudState apply_strategy(const CloudState& state, const Strategy& s);

struct StrategyEvaluation {
  Strategy strategy;
  double baseline_cr = 0.0;
  double projected_cr = 0.0;
  double delta_pct = 0.0;  // 100 * (projected - baseline) / baseline
  double projected_roa = 0.0;
  double projected_mapl = 0.0;
  std::size_t projected_paths = 0;
  std::optional<std::string> failure;  // set when the candidate could not be analysed

  bool failed() const noexcept { return failure.has_value(); }
};

double delta_pct(double baseline, double projected) noexcept;

struct EvalOptions {
  PathLimits limits;
  bool derive_coresidency = true;
  bool include_migration = true;
  bool include_patching = true;
  /// When set, only VMs (and the target) of this tenant are candidates.
  std::optional<std::string> tenant;
  /// Acceptable cloud risk; selection fails if no candidate reaches it.
  std::optional<double> threshold;
  /// 0 = hardware concurrency.
  unsigned workers = 0;
};

struct EvaluationRun {
  MetricsReport baseline;
  bool no_threat = false;  // baseline has no attack path; evaluations is empty
  std::vector<StrategyEvaluation> evaluations;
};

/// All candidate responses in deterministic order. The baseline state is
/// never modified; PathExplosion on a candidate marks it failed.
EvaluationRun evaluate_all(const CloudState& state, const TopologyDecl& topology,
                           const EvalOptions& opts = {});

/// Candidates in the order evaluate_all reports them.
std::vector<Strategy> candidate_strategies(const CloudState& state, const EvalOptions& opts = {});

/// Minimum projected_cr among non-failed evaluations, ties broken by
/// Strategy::precedes. Errors: EmptyEvaluationSet, ThresholdUnreachable.
const StrategyEvaluation& select_strategy(const std::vector<StrategyEvaluation>& evals,
                                          std::optional<double> threshold = std::nullopt);

struct ComparisonRow {
  std::string vm_id;
  std::optional<double> patch_delta_pct;  // best patching delta for the VM
  std::optional<double> vmlm_delta_pct;   // best live-migration delta for the VM
  bool selected = false;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

ComparisonTable comparison_report(const std::vector<StrategyEvaluation>& evals);

std::string to_csv(const ComparisonTable& table);
nlohmann::json to_json(const ComparisonTable& table);

/// Baseline vs projected (cr, roa, mapl) triples for radar plots.
nlohmann::json radar_export(const EvaluationRun& run);

}  // namespace harmmtd
