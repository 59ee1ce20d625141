#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "harmmtd/error.hpp"
#include "harmmtd/metrics.hpp"
#include "harmmtd/scenario.hpp"
#include "harmmtd/strategy.hpp"

namespace harmmtd::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

fs::path strategy_file(const RunConfig& config) {
  return config.strategy_path.empty() ? config.out_dir / "strategy.json" : config.strategy_path;
}

EvalOptions eval_options(const RunConfig& config, const Scenario& scenario) {
  EvalOptions opts;
  opts.limits = config.limits;
  opts.derive_coresidency = config.derive_coresidency;
  opts.threshold = config.threshold;
  if (!scenario.cloud.target().tenant.empty()) opts.tenant = scenario.cloud.target().tenant;
  return opts;
}

std::string label(const Strategy& s) {
  return std::string(to_string(s.kind)) + "(" + s.vm_id + " -> " +
         (s.kind == StrategyKind::LiveMigrate ? s.dest_host : s.cve_id) + ")";
}

void print_table(const ComparisonTable& table) {
  std::cout << "vm_id            patch%     vm-lm%   S\n";
  for (const auto& r : table.rows) {
    std::string line = r.vm_id;
    line.resize(std::max<std::size_t>(line.size(), 14), ' ');
    auto col = [](const std::optional<double>& v) {
      std::string s = v ? format3(*v) : "-";
      return std::string(std::max<std::ptrdiff_t>(0, 10 - static_cast<std::ptrdiff_t>(s.size())), ' ') + s;
    };
    std::cout << line << col(r.patch_delta_pct) << " " << col(r.vmlm_delta_pct) << "   "
              << (r.selected ? "x" : ".") << "\n";
  }
}

int select_round(const RunConfig& config) {
  const Scenario scenario = load_scenario(config.scenario_path);
  const EvalOptions opts = eval_options(config, scenario);
  const EvaluationRun run = evaluate_all(scenario.cloud, scenario.topology, opts);

  if (run.no_threat) {
    std::cout << "NoThreat: the baseline model has no attack path; nothing to deploy\n";
    write_file(strategy_file(config), "");
    return kOk;
  }

  const ComparisonTable table = comparison_report(run.evaluations);
  write_file(config.out_dir / "comparison.csv", to_csv(table));
  write_file(config.out_dir / "comparison.json", dump(to_json(table)));
  print_table(table);
  for (const auto& ev : run.evaluations) {
    if (ev.failed()) spdlog::warn("candidate {} failed: {}", label(ev.strategy), *ev.failure);
  }

  const StrategyEvaluation& chosen = select_strategy(run.evaluations, opts.threshold);
  nlohmann::json out = to_json(chosen.strategy);
  write_file(strategy_file(config), dump(out));
  std::cout << "baseline cloud risk " << format3(chosen.baseline_cr) << "\n"
            << "selected " << label(chosen.strategy) << ": projected cloud risk "
            << format3(chosen.projected_cr) << " (" << format3(chosen.delta_pct) << "%)\n";
  return kOk;
}

}  // namespace

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::PathExplosion: return kPathExplosion;
      case ErrorCode::ThresholdUnreachable: return kThresholdUnreachable;
      case ErrorCode::NetworkError: return kNetworkFailure;
      case ErrorCode::RegistrationDenied:
      case ErrorCode::Unauthorized:
      case ErrorCode::ExecutionFailed:
      case ErrorCode::SignatureInvalid:
      case ErrorCode::DigestMismatch:
      case ErrorCode::ReplayedNonce:
      case ErrorCode::SessionExpired:
        return kRejected;
      default: return kBadInput;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
}

int cmd_analyze(const RunConfig& config) {
  return guarded([&] {
    const Scenario scenario = load_scenario(config.scenario_path);
    const HarmGraph graph = build_harm(scenario.cloud, scenario.topology, config.derive_coresidency);
    const MetricsReport report = compute_metrics(graph, config.limits);
    write_file(config.out_dir / "metrics.json", dump(to_json(report, graph)));
    write_file(config.out_dir / "metrics.csv", metrics_csv_header() + "\n" + metrics_csv_row(report) + "\n");
    std::cout << "paths " << report.path_count << "\n"
              << "cloud_risk " << format3(report.cloud_risk) << "\n"
              << "roa " << format3(report.roa) << "\n"
              << "mapl " << format3(report.mapl) << "\n";
    return kOk;
  });
}

int cmd_select(const RunConfig& config) {
  return guarded([&] {
    if (!config.interval_seconds) return select_round(config);
    for (int round = 1; !config.rounds || round <= *config.rounds; ++round) {
      spdlog::info("periodic selection round {}", round);
      const int rc = select_round(config);
      if (rc != kOk) return rc;
      if (config.rounds && round == *config.rounds) break;
      std::this_thread::sleep_for(std::chrono::seconds(*config.interval_seconds));
    }
    return static_cast<int>(kOk);
  });
}

int cmd_report(const RunConfig& config) {
  return guarded([&] {
    const Scenario scenario = load_scenario(config.scenario_path);
    EvalOptions opts = eval_options(config, scenario);
    opts.threshold.reset();
    const EvaluationRun run = evaluate_all(scenario.cloud, scenario.topology, opts);
    const ComparisonTable table = comparison_report(run.evaluations);
    write_file(config.out_dir / "radar.json", dump(radar_export(run)));

    std::string csv = "label," + metrics_csv_header() + "\n";
    csv += "baseline," + metrics_csv_row(run.baseline) + "\n";
    for (const auto& ev : run.evaluations) {
      if (ev.failed()) continue;
      MetricsReport m;
      m.cloud_risk = ev.projected_cr;
      m.roa = ev.projected_roa;
      m.mapl = ev.projected_mapl;
      m.path_count = ev.projected_paths;
      csv += label(ev.strategy) + "," + metrics_csv_row(m) + "\n";
    }
    write_file(config.out_dir / "radar.csv", csv);
    write_file(config.out_dir / "comparison.csv", to_csv(table));
    write_file(config.out_dir / "comparison.json", dump(to_json(table)));

    std::cout << "baseline cr " << format3(run.baseline.cloud_risk) << " roa " << format3(run.baseline.roa)
              << " mapl " << format3(run.baseline.mapl) << " paths " << run.baseline.path_count << "\n";
    if (run.no_threat) {
      std::cout << "NoThreat: the baseline model has no attack path\n";
    } else {
      print_table(table);
    }
    return kOk;
  });
}

}  // namespace harmmtd::cli
