#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "harmmtd/model.hpp"

namespace harmmtd {

struct Host {
  std::string host_id;
  std::int64_t capacity = 0;  // maximum number of VMs placed on the host

  bool operator==(const Host&) const = default;
};

/// Tenant-declared virtual-network reachability (from -> to).
struct DeclaredEdge {
  std::string from;
  std::string to;

  auto operator<=>(const DeclaredEdge&) const = default;
};

struct TopologyDecl {
  std::vector<DeclaredEdge> edges;
};

/// Provider-side ground truth: hosts, VM placement and the target.
///
/// Immutable value. Actions return a new state and leave the receiver as it
/// was, so alternatives can be evaluated from the same baseline.
class CloudState {
 public:
  CloudState() = default;

  /// Validates ids, host references and capacities. Throws Error.
  CloudState(std::vector<Host> hosts, std::vector<VmNode> vms, TargetNode target);

  const std::vector<Host>& hosts() const noexcept { return hosts_; }
  const std::map<std::string, VmNode>& vms() const noexcept { return vms_; }
  const TargetNode& target() const noexcept { return target_; }
  const std::string& target_id() const noexcept { return target_.id; }

  const Host* find_host(const std::string& host_id) const noexcept;
  const VmNode* find_vm(const std::string& vm_id) const noexcept;

  /// vm_id -> host_id, derived from the VM records.
  std::map<std::string, std::string> placement() const;
  std::int64_t host_load(const std::string& host_id) const noexcept;

  bool operator==(const CloudState&) const = default;

 private:
  friend CloudState apply_migration(const CloudState&, const std::string&, const std::string&);
  friend CloudState apply_patch(const CloudState&, const std::string&, const std::string&);

  std::vector<Host> hosts_;  // sorted by host_id
  std::map<std::string, VmNode> vms_;
  TargetNode target_;
};

/// Live-migrates one VM. Errors: UnknownVm, UnknownHost, NoOpMigration,
/// CapacityExceeded.
CloudState apply_migration(const CloudState& state, const std::string& vm_id,
                           const std::string& dest_host);

/// Removes one vulnerability from a VM (or from the target). Errors:
/// UnknownVm, UnknownVulnerability, NotPatchable.
CloudState apply_patch(const CloudState& state, const std::string& vm_id,
                       const std::string& cve_id);

}  // namespace harmmtd
