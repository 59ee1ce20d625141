#include "harmmtd/metrics.hpp"

#include <charconv>
#include <cmath>

#include "harmmtd/error.hpp"
#include "harmmtd/exact_sum.hpp"

namespace harmmtd {

namespace {

const HarmNode& resolve(const HarmGraph& graph, std::size_t index) {
  if (index >= graph.size()) {
    throw Error(ErrorCode::DanglingReference, "path node " + std::to_string(index) + " is not in the graph");
  }
  return graph.node(index);
}

double node_roa(const HarmNode& node) {
  const Vulnerability* v = node.tree.effective_vulnerability();
  return v == nullptr ? 0.0 : v->severity() / v->attack_cost;
}

template <typename Term>
double sum_over_path(const AttackPath& path, const HarmGraph& graph, Term term) {
  ExactSum acc;
  for (std::size_t k = 1; k < path.nodes.size(); ++k) acc.add(term(resolve(graph, path.nodes[k])));
  return acc.value();
}

}  // namespace

double path_risk(const AttackPath& path, const HarmGraph& graph) {
  return sum_over_path(path, graph, [](const HarmNode& n) { return n.risk(); });
}

double path_return_on_attack(const AttackPath& path, const HarmGraph& graph) {
  return sum_over_path(path, graph, node_roa);
}

MetricsReport compute_metrics(const HarmGraph& graph, const std::vector<AttackPath>& paths) {
  MetricsReport report;
  report.path_count = paths.size();
  if (paths.empty()) return report;

  ExactSum cr;
  ExactSum roa;
  std::size_t total_length = 0;
  report.per_path.reserve(paths.size());
  for (const auto& p : paths) {
    const double risk = path_risk(p, graph);
    cr.add(risk);
    roa.add(path_return_on_attack(p, graph));
    total_length += p.length();
    report.per_path.push_back({p, risk});
  }
  report.cloud_risk = cr.value();
  report.roa = roa.value();
  report.mapl = static_cast<double>(total_length) / static_cast<double>(paths.size());
  return report;
}

MetricsReport compute_metrics(const HarmGraph& graph, const PathLimits& limits) {
  return compute_metrics(graph, enumerate_attack_paths(graph, limits));
}

double cloud_risk(const HarmGraph& graph, const PathLimits& limits) {
  return compute_metrics(graph, limits).cloud_risk;
}

double return_on_attack(const HarmGraph& graph, const PathLimits& limits) {
  return compute_metrics(graph, limits).roa;
}

double mapl(const HarmGraph& graph, const PathLimits& limits) {
  return compute_metrics(graph, limits).mapl;
}

double round3(double x) noexcept {
  if (!std::isfinite(x)) return x;
  const double r = std::round(x * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;  // no "-0.000"
}

std::string format3(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, round3(x), std::chars_format::fixed, 3);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const MetricsReport& report, const HarmGraph& graph) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& pr : report.per_path) {
    paths.push_back({{"path", pr.path.ids(graph)}, {"path_risk", round3(pr.risk)}});
  }
  return {
      {"cloud_risk", round3(report.cloud_risk)},
      {"roa", round3(report.roa)},
      {"mapl", round3(report.mapl)},
      {"path_count", report.path_count},
      {"per_path", std::move(paths)},
  };
}

std::string metrics_csv_header() { return "cr,roa,mapl,path_count"; }

std::string metrics_csv_row(const MetricsReport& report) {
  return format3(report.cloud_risk) + "," + format3(report.roa) + "," + format3(report.mapl) + "," +
         std::to_string(report.path_count);
}

}  // namespace harmmtd
