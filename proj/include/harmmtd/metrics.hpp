#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "harmmtd/harm.hpp"

namespace harmmtd {

struct PathRisk {
  AttackPath path;
  double risk = 0.0;
};

/// Cloud-level security metrics over one HarmGraph.
struct MetricsReport {
  double cloud_risk = 0.0;
  double roa = 0.0;
  double mapl = 0.0;
  std::size_t path_count = 0;
  std::vector<PathRisk> per_path;
};

/// Sum of node risks along the path, attacker excluded. Throws
/// DanglingReference for an index outside the graph.
double path_risk(const AttackPath& path, const HarmGraph& graph);

/// Same aggregation as path_risk with each node's risk divided by the attack
/// cost of its effective vulnerability.
double path_return_on_attack(const AttackPath& path, const HarmGraph& graph);

double cloud_risk(const HarmGraph& graph, const PathLimits& limits = {});
double return_on_attack(const HarmGraph& graph, const PathLimits& limits = {});
double mapl(const HarmGraph& graph, const PathLimits& limits = {});

/// All metrics from a single path enumeration.
MetricsReport compute_metrics(const HarmGraph& graph, const PathLimits& limits = {});
MetricsReport compute_metrics(const HarmGraph& graph, const std::vector<AttackPath>& paths);

/// Fixed three-decimal rounding used by every report.
double round3(double x) noexcept;
/// Locale-independent "%.3f".
std::string format3(double x);

nlohmann::json to_json(const MetricsReport& report, const HarmGraph& graph);
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

}  // namespace harmmtd
