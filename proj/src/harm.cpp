#include "harmmtd/harm.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "harmmtd/error.hpp"

namespace harmmtd {

std::string_view to_string(EdgeProvenance p) noexcept {
  switch (p) {
    case EdgeProvenance::Declared: return "declared";
    case EdgeProvenance::InternetEntry: return "internet_entry";
    case EdgeProvenance::CoResidency: return "co_residency";
  }
  return "unknown";
}

bool HarmGraph::has_edge(std::size_t from, std::size_t to) const {
  const auto& succ = adjacency_.at(from);
  return std::binary_search(succ.begin(), succ.end(), to);
}

std::optional<std::size_t> HarmGraph::find(std::string_view id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

bool HarmGraph::traversable(std::size_t i) const {
  const HarmNode& n = nodes_.at(i);
  return n.kind != NodeKind::Vm || !n.tree.empty();
}

std::set<std::pair<std::string, std::string>> HarmGraph::edge_ids(EdgeProvenance p) const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : edges_) {
    if (e.provenance == p) out.emplace(nodes_[e.from].id, nodes_[e.to].id);
  }
  return out;
}

std::vector<std::string> AttackPath::ids(const HarmGraph& graph) const {
  std::vector<std::string> out;
  out.reserve(nodes.size());
  for (std::size_t i : nodes) out.push_back(graph.node(i).id);
  return out;
}

HarmGraph build_harm(const CloudState& cloud, const TopologyDecl& topology,
                     bool derive_coresidency) {
  if (cloud.target_id().empty()) throw Error(ErrorCode::MissingTarget, "no target node");

  HarmGraph g;
  g.nodes_.push_back(HarmNode{NodeKind::Attacker, std::string(kAttackerId), {}, {}, {}});
  std::map<std::string, std::size_t, std::less<>> index;
  for (const auto& [id, vm] : cloud.vms()) {
    index.emplace(id, g.nodes_.size());
    g.nodes_.push_back(HarmNode{NodeKind::Vm, id, vm.tenant, vm.host_id, vm.attack_tree});
  }
  const TargetNode& target = cloud.target();
  const std::size_t target_index = g.nodes_.size();
  index.emplace(target.id, target_index);
  g.nodes_.push_back(
      HarmNode{NodeKind::Target, target.id, target.tenant, target.host_id, target.attack_tree});

  std::set<HarmEdge> edges;
  for (const auto& decl : topology.edges) {
    auto from = index.find(decl.from);
    auto to = index.find(decl.to);
    if (from == index.end()) {
      throw Error(ErrorCode::DanglingReference, "edge source '" + decl.from + "' is not a known VM");
    }
    if (to == index.end()) {
      throw Error(ErrorCode::DanglingReference, "edge destination '" + decl.to + "' is not a known node");
    }
    if (from->second == to->second) {
      throw Error(ErrorCode::InvalidScenario, "self-loop on '" + decl.from + "'");
    }
    if (from->second == target_index) {
      throw Error(ErrorCode::InvalidScenario, "edge out of the target '" + decl.from + "'");
    }
    edges.insert({from->second, to->second, EdgeProvenance::Declared});
  }

  for (std::size_t i = 1; i < target_index; ++i) {
    const VmNode& vm = cloud.vms().at(g.nodes_[i].id);
    if (vm.internet_facing) edges.insert({HarmGraph::kAttacker, i, EdgeProvenance::InternetEntry});
  }

  if (derive_coresidency) {
    for (std::size_t i = 1; i < target_index; ++i) {
      for (std::size_t j = 1; j < target_index; ++j) {
        if (i == j) continue;
        const HarmNode& a = g.nodes_[i];
        const HarmNode& b = g.nodes_[j];
        if (a.host_id == b.host_id && a.tenant != b.tenant) {
          edges.insert({i, j, EdgeProvenance::CoResidency});
        }
      }
    }
  }

  g.edges_.assign(edges.begin(), edges.end());
  g.adjacency_.assign(g.nodes_.size(), {});
  for (const auto& e : g.edges_) {
    auto& succ = g.adjacency_[e.from];
    if (succ.empty() || succ.back() != e.to) succ.push_back(e.to);
  }
  return g;
}

namespace {

class PathEnumerator {
 public:
  PathEnumerator(const HarmGraph& graph, const PathLimits& limits)
      : graph_(graph), limits_(limits), on_path_(graph.size(), false) {}

  std::vector<AttackPath> run() {
    stack_.push_back(HarmGraph::kAttacker);
    on_path_[HarmGraph::kAttacker] = true;
    visit(HarmGraph::kAttacker);
    return std::move(paths_);
  }

 private:
  void visit(std::size_t current) {
    if (current == graph_.target()) {
      if (paths_.size() >= limits_.max_paths) {
        throw Error(ErrorCode::PathExplosion,
                    "more than " + std::to_string(limits_.max_paths) + " attack paths");
      }
      paths_.push_back(AttackPath{stack_});
      return;
    }
    // stack_ holds the attacker plus (stack_.size() - 1) exploited nodes.
    if (stack_.size() - 1 == limits_.max_depth) {
      if (target_reachable_avoiding_path(current)) {
        throw Error(ErrorCode::PathExplosion,
                    "an attack path is longer than max depth " + std::to_string(limits_.max_depth));
      }
      return;
    }
    for (std::size_t next : graph_.successors(current)) {
      if (on_path_[next] || !graph_.traversable(next)) continue;
      on_path_[next] = true;
      stack_.push_back(next);
      visit(next);
      stack_.pop_back();
      on_path_[next] = false;
    }
  }

  // Any walk from `from` to the target through nodes off the current path
  // contains a simple path, so plain BFS decides whether a longer path exists.
  bool target_reachable_avoiding_path(std::size_t from) const {
    std::vector<bool> seen = on_path_;
    std::vector<std::size_t> frontier{from};
    while (!frontier.empty()) {
      const std::size_t u = frontier.back();
      frontier.pop_back();
      for (std::size_t v : graph_.successors(u)) {
        if (seen[v] || !graph_.traversable(v)) continue;
        if (v == graph_.target()) return true;
        seen[v] = true;
        frontier.push_back(v);
      }
    }
    return false;
  }

  const HarmGraph& graph_;
  const PathLimits& limits_;
  std::vector<bool> on_path_;
  std::vector<std::size_t> stack_;
  std::vector<AttackPath> paths_;
};

}  // namespace

std::vector<AttackPath> enumerate_attack_paths(const HarmGraph& graph, const PathLimits& limits) {
  if (limits.max_depth < 1 || limits.max_paths < 1) {
    throw std::invalid_argument("path limits must be at least 1");
  }
  return PathEnumerator(graph, limits).run();
}

}  // namespace harmmtd
