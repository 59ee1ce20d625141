#include "harmmtd/strategy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "harmmtd/error.hpp"

namespace harmmtd {

using nlohmann::json;

std::string_view to_string(StrategyKind kind) noexcept {
  return kind == StrategyKind::LiveMigrate ? "LiveMigrate" : "Patch";
}

Strategy Strategy::live_migrate(std::string vm_id, std::string dest_host) {
  return Strategy{StrategyKind::LiveMigrate, std::move(vm_id), std::move(dest_host), {}};
}

Strategy Strategy::patch(std::string vm_id, std::string cve_id) {
  return Strategy{StrategyKind::Patch, std::move(vm_id), {}, std::move(cve_id)};
}

bool Strategy::precedes(const Strategy& other) const noexcept {
  if (kind != other.kind) return kind == StrategyKind::LiveMigrate;
  if (vm_id != other.vm_id) return vm_id < other.vm_id;
  const std::string& a = kind == StrategyKind::LiveMigrate ? dest_host : cve_id;
  const std::string& b = kind == StrategyKind::LiveMigrate ? other.dest_host : other.cve_id;
  return a < b;
}

json to_json(const Strategy& s) {
  json j = {{"kind", to_string(s.kind)}, {"vm_id", s.vm_id}};
  if (s.kind == StrategyKind::LiveMigrate) {
    j["dest_host"] = s.dest_host;
  } else {
    j["cve_id"] = s.cve_id;
  }
  return j;
}

Strategy strategy_from_json(const json& j) {
  auto bad = [](const std::string& why) -> Strategy {
    throw Error(ErrorCode::InvalidScenario, "malformed strategy: " + why);
  };
  if (!j.is_object()) return bad("not an object");
  auto text = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
      bad(std::string("missing '") + key + "'");
    }
    return j.at(key).get<std::string>();
  };
  const std::string kind = text("kind");
  if (kind == "LiveMigrate") {
    if (j.contains("cve_id")) return bad("LiveMigrate carries a cve_id");
    return Strategy::live_migrate(text("vm_id"), text("dest_host"));
  }
  if (kind == "Patch") {
    if (j.contains("dest_host")) return bad("Patch carries a dest_host");
    return Strategy::patch(text("vm_id"), text("cve_id"));
  }
  return bad("unknown kind '" + kind + "'");
}

CloudState apply_strategy(const CloudState& state, const Strategy& s) {
  return s.kind == StrategyKind::LiveMigrate ? apply_migration(state, s.vm_id, s.dest_host)
                                             : apply_patch(state, s.vm_id, s.cve_id);
}

double delta_pct(double baseline, double projected) noexcept {
  if (baseline == 0.0) return projected == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * (projected - baseline) / baseline;
}

std::vector<Strategy> candidate_strategies(const CloudState& state, const EvalOptions& opts) {
  auto owned = [&](const std::string& tenant) { return !opts.tenant || *opts.tenant == tenant; };

  std::vector<Strategy> out;
  for (const auto& [id, vm] : state.vms()) {
    if (!owned(vm.tenant)) continue;
    if (opts.include_migration) {
      for (const auto& host : state.hosts()) {
        if (host.host_id == vm.host_id) continue;
        if (state.host_load(host.host_id) >= host.capacity) continue;
        out.push_back(Strategy::live_migrate(id, host.host_id));
      }
    }
    if (opts.include_patching) {
      if (const Vulnerability* v = vm.attack_tree.effective_patchable()) {
        out.push_back(Strategy::patch(id, v->cve_id));
      }
    }
  }
  const TargetNode& target = state.target();
  if (opts.include_patching && owned(target.tenant)) {
    if (const Vulnerability* v = target.attack_tree.effective_patchable()) {
      out.push_back(Strategy::patch(target.id, v->cve_id));
    }
  }
  return out;
}

EvaluationRun evaluate_all(const CloudState& state, const TopologyDecl& topology,
                           const EvalOptions& opts) {
  EvaluationRun run;
  run.baseline = compute_metrics(build_harm(state, topology, opts.derive_coresidency), opts.limits);
  if (run.baseline.path_count == 0) {
    run.no_threat = true;
    return run;
  }

  const std::vector<Strategy> candidates = candidate_strategies(state, opts);
  const double baseline_cr = run.baseline.cloud_risk;
  run.evaluations.resize(candidates.size());

  auto evaluate = [&](std::size_t i) {
    StrategyEvaluation& ev = run.evaluations[i];
    ev.strategy = candidates[i];
    ev.baseline_cr = baseline_cr;
    try {
      const CloudState projected = apply_strategy(state, candidates[i]);
      const MetricsReport m =
          compute_metrics(build_harm(projected, topology, opts.derive_coresidency), opts.limits);
      ev.projected_cr = m.cloud_risk;
      ev.projected_roa = m.roa;
      ev.projected_mapl = m.mapl;
      ev.projected_paths = m.path_count;
      ev.delta_pct = delta_pct(baseline_cr, m.cloud_risk);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PathExplosion) throw;
      ev.failure = e.what();
    }
  };

  unsigned workers = opts.workers != 0 ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, candidates.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) evaluate(i);
    return run;
  }

  // Each slot is written by exactly one worker, so output order is fixed by
  // candidate order regardless of scheduling.
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
          try {
            evaluate(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return run;
}

const StrategyEvaluation& select_strategy(const std::vector<StrategyEvaluation>& evals,
                                          std::optional<double> threshold) {
  const StrategyEvaluation* best = nullptr;
  for (const auto& ev : evals) {
    if (ev.failed()) continue;
    if (best == nullptr || ev.projected_cr < best->projected_cr ||
        (ev.projected_cr == best->projected_cr && ev.strategy.precedes(best->strategy))) {
      best = &ev;
    }
  }
  if (best == nullptr) throw Error(ErrorCode::EmptyEvaluationSet, "no successful candidate evaluation");
  if (threshold && best->projected_cr > *threshold) {
    throw Error(ErrorCode::ThresholdUnreachable,
                "best projected cloud risk " + format3(best->projected_cr) + " exceeds threshold " +
                    format3(*threshold));
  }
  return *best;
}

ComparisonTable comparison_report(const std::vector<StrategyEvaluation>& evals) {
  ComparisonTable table;
  auto row_for = [&](const std::string& vm_id) -> ComparisonRow& {
    for (auto& r : table.rows) {
      if (r.vm_id == vm_id) return r;
    }
    table.rows.push_back(ComparisonRow{vm_id, {}, {}, false});
    return table.rows.back();
  };
  auto keep_min = [](std::optional<double>& slot, double v) {
    if (!slot || v < *slot) slot = v;
  };

  bool any_ok = false;
  for (const auto& ev : evals) {
    ComparisonRow& row = row_for(ev.strategy.vm_id);
    if (ev.failed()) continue;
    any_ok = true;
    keep_min(ev.strategy.kind == StrategyKind::Patch ? row.patch_delta_pct : row.vmlm_delta_pct,
             ev.delta_pct);
  }
  if (any_ok) {
    const std::string& chosen = select_strategy(evals).strategy.vm_id;
    row_for(chosen).selected = true;
  }
  return table;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format3(*v) : std::string(); }

json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return round3(*v);
}

json metrics_triple(double cr, double roa, double m) {
  return {{"cr", round3(cr)}, {"roa", round3(roa)}, {"mapl", round3(m)}};
}

}  // namespace

std::string to_csv(const ComparisonTable& table) {
  std::string out = "vm_id,patch_delta_pct,vmlm_delta_pct,selected\n";
  for (const auto& r : table.rows) {
    out += r.vm_id + "," + cell(r.patch_delta_pct) + "," + cell(r.vmlm_delta_pct) + "," +
           (r.selected ? "yes" : "no") + "\n";
  }
  return out;
}

json to_json(const ComparisonTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"vm_id", r.vm_id},
                    {"patch_delta_pct", optional_number(r.patch_delta_pct)},
                    {"vmlm_delta_pct", optional_number(r.vmlm_delta_pct)},
                    {"selected", r.selected}});
  }
  return {{"rows", std::move(rows)}};
}

json radar_export(const EvaluationRun& run) {
  json per = json::array();
  for (const auto& ev : run.evaluations) {
    if (ev.failed()) continue;
    json entry = metrics_triple(ev.projected_cr, ev.projected_roa, ev.projected_mapl);
    entry["strategy"] = to_json(ev.strategy);
    entry["delta_pct"] = optional_number(ev.delta_pct);
    per.push_back(std::move(entry));
  }
  return {{"baseline", metrics_triple(run.baseline.cloud_risk, run.baseline.roa, run.baseline.mapl)},
          {"per_strategy", std::move(per)}};
}

}  // namespace harmmtd
