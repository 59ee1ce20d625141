#pragma once

#include <string>
#include <vector>

namespace harmmtd {

/// A single CVE record on a VM (a leaf of the lower-layer attack tree).
struct Vulnerability {
  std::string cve_id;
  double base_score = 0.0;  // stored, not used by any metric
  double exploitability = 0.0;
  double impact = 0.0;
  double attack_cost = 1.0;
  bool patchable = true;

  /// Exploitability times impact.
  double severity() const noexcept { return exploitability * impact; }

  bool operator==(const Vulnerability&) const = default;
};

/// Lower layer of the model: one OR gate over the VM's vulnerabilities.
///
/// Any single leaf is enough to compromise the VM, so the tree is summarised
/// by its highest-severity leaf. Ties go to the smallest cve_id. A tree with
/// no leaves marks the VM as unexploitable.
class AttackTree {
 public:
  AttackTree() = default;
  explicit AttackTree(std::vector<Vulnerability> leaves);

  const std::vector<Vulnerability>& leaves() const noexcept { return leaves_; }
  bool empty() const noexcept { return leaves_.empty(); }

  /// nullptr for an empty tree.
  const Vulnerability* effective_vulnerability() const noexcept;
  double effective_severity() const noexcept;

  /// Highest-severity leaf with patchable = true, same tie-break; nullptr if none.
  const Vulnerability* effective_patchable() const noexcept;

  const Vulnerability* find(const std::string& cve_id) const noexcept;

  /// Copy of the tree without the named leaf.
  AttackTree without(const std::string& cve_id) const;

  bool operator==(const AttackTree&) const = default;

 private:
  std::vector<Vulnerability> leaves_;
};

struct VmNode {
  std::string vm_id;
  std::string display_name;
  std::string os_label;
  std::string tenant;
  std::string host_id;
  bool internet_facing = false;
  AttackTree attack_tree;

  bool operator==(const VmNode&) const = default;
};

/// The attacker's goal (the enterprise database). Carries its own attack tree
/// and contributes risk to every path that ends on it.
struct TargetNode {
  std::string id;
  std::string host_id;
  std::string tenant;  // owning enterprise; empty when unspecified
  AttackTree attack_tree;

  bool operator==(const TargetNode&) const = default;
};

/// Severity of the VM's effective vulnerability; 0 for a vulnerability-free VM.
double vm_risk(const VmNode& vm) noexcept;

}  // namespace harmmtd
