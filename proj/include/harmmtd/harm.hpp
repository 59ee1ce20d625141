#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "harmmtd/cloud.hpp"
#include "harmmtd/model.hpp"

namespace harmmtd {

inline constexpr std::string_view kAttackerId = "@attacker";

enum class NodeKind { Attacker, Vm, Target };

enum class EdgeProvenance { Declared, InternetEntry, CoResidency };

std::string_view to_string(EdgeProvenance p) noexcept;

struct HarmNode {
  NodeKind kind = NodeKind::Vm;
  std::string id;
  std::string tenant;
  std::string host_id;
  AttackTree tree;  // empty for the attacker

  double risk() const noexcept { return tree.effective_severity(); }
};

struct HarmEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  EdgeProvenance provenance = EdgeProvenance::Declared;

  auto operator<=>(const HarmEdge&) const = default;
};

/// Two-layer model: an upper reachability graph over {attacker, VMs, target}
/// whose nodes each carry a lower-layer attack tree.
///
/// Node order is fixed: index 0 is the attacker, then VMs sorted by id, then
/// the target. Path ordering and every report follow this order.
class HarmGraph {
 public:
  static constexpr std::size_t kAttacker = 0;

  const std::vector<HarmNode>& nodes() const noexcept { return nodes_; }
  const HarmNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t target() const noexcept { return nodes_.size() - 1; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Sorted by (from, to, provenance); the same pair can appear with more
  /// than one provenance.
  const std::vector<HarmEdge>& edges() const noexcept { return edges_; }

  /// Distinct successors in ascending index order.
  std::span<const std::size_t> successors(std::size_t i) const { return adjacency_.at(i); }

  bool has_edge(std::size_t from, std::size_t to) const;
  std::optional<std::size_t> find(std::string_view id) const;

  /// VMs with an empty attack tree cannot be traversed. The attacker and the
  /// target are always traversable.
  bool traversable(std::size_t i) const;

  /// (from id, to id) pairs carrying the given provenance.
  std::set<std::pair<std::string, std::string>> edge_ids(EdgeProvenance p) const;

 private:
  friend HarmGraph build_harm(const CloudState&, const TopologyDecl&, bool);

  std::vector<HarmNode> nodes_;
  std::vector<HarmEdge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// Copies declared edges, adds attacker -> VM for every internet-facing VM and,
/// when enabled, VM <-> VM for every pair of different tenants sharing a host.
/// Errors: DanglingReference, MissingTarget, InvalidScenario (self-loop or an
/// edge out of the target).
HarmGraph build_harm(const CloudState& cloud, const TopologyDecl& topology,
                     bool derive_coresidency = true);

struct PathLimits {
  std::size_t max_depth = 12;
  std::size_t max_paths = 100'000;
};

/// Simple attacker -> target path, stored as node indices of one HarmGraph.
struct AttackPath {
  std::vector<std::size_t> nodes;

  /// Nodes excluding the attacker: exploited VMs plus the target.
  std::size_t length() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
  std::vector<std::string> ids(const HarmGraph& graph) const;

  auto operator<=>(const AttackPath&) const = default;
};

/// Every simple attacker -> target path, in lexicographic order of node
/// indices. Throws PathExplosion when more than max_paths paths exist or any
/// path is longer than max_depth; the result is never truncated.
std::vector<AttackPath> enumerate_attack_paths(const HarmGraph& graph, const PathLimits& limits = {});

}  // namespace harmmtd
