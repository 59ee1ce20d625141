#include "harmmtd/cloud.hpp"

#include <algorithm>
#include <set>

#include "harmmtd/error.hpp"

namespace harmmtd {

namespace {

void check_node_id(const std::string& id, const char* what) {
  if (id.empty()) throw Error(ErrorCode::InvalidScenario, std::string(what) + " id is empty");
  if (id.front() == '@') {
    throw Error(ErrorCode::InvalidScenario,
                std::string(what) + " id '" + id + "' uses the reserved '@' prefix");
  }
}

}  // namespace

CloudState::CloudState(std::vector<Host> hosts, std::vector<VmNode> vms, TargetNode target)
    : hosts_(std::move(hosts)), target_(std::move(target)) {
  std::sort(hosts_.begin(), hosts_.end(),
            [](const Host& a, const Host& b) { return a.host_id < b.host_id; });
  for (std::size_t i = 0; i < hosts_.size(); ++i) {
    if (hosts_[i].host_id.empty()) throw Error(ErrorCode::InvalidScenario, "host id is empty");
    if (hosts_[i].capacity < 0) {
      throw Error(ErrorCode::InvalidScenario, "host '" + hosts_[i].host_id + "' has negative capacity");
    }
    if (i > 0 && hosts_[i - 1].host_id == hosts_[i].host_id) {
      throw Error(ErrorCode::DuplicateId, "duplicate host id '" + hosts_[i].host_id + "'");
    }
  }

  if (target_.id.empty()) throw Error(ErrorCode::MissingTarget, "scenario declares no target");
  check_node_id(target_.id, "target");
  if (find_host(target_.host_id) == nullptr) {
    throw Error(ErrorCode::UnknownHost,
                "target '" + target_.id + "' references unknown host '" + target_.host_id + "'");
  }

  for (auto& vm : vms) {
    check_node_id(vm.vm_id, "vm");
    if (vm.vm_id == target_.id) {
      throw Error(ErrorCode::DuplicateId, "vm id '" + vm.vm_id + "' collides with the target id");
    }
    if (find_host(vm.host_id) == nullptr) {
      throw Error(ErrorCode::UnknownHost,
                  "vm '" + vm.vm_id + "' references unknown host '" + vm.host_id + "'");
    }
    std::string id = vm.vm_id;
    if (!vms_.emplace(id, std::move(vm)).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate vm id '" + id + "'");
    }
  }

  for (const auto& host : hosts_) {
    if (host_load(host.host_id) > host.capacity) {
      throw Error(ErrorCode::CapacityExceeded, "host '" + host.host_id + "' holds " +
                                                   std::to_string(host_load(host.host_id)) +
                                                   " VMs but has capacity " +
                                                   std::to_string(host.capacity));
    }
  }
}

const Host* CloudState::find_host(const std::string& host_id) const noexcept {
  auto it = std::lower_bound(hosts_.begin(), hosts_.end(), host_id,
                             [](const Host& h, const std::string& id) { return h.host_id < id; });
  return (it != hosts_.end() && it->host_id == host_id) ? &*it : nullptr;
}

const VmNode* CloudState::find_vm(const std::string& vm_id) const noexcept {
  auto it = vms_.find(vm_id);
  return it == vms_.end() ? nullptr : &it->second;
}

std::map<std::string, std::string> CloudState::placement() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, vm] : vms_) out.emplace(id, vm.host_id);
  return out;
}

std::int64_t CloudState::host_load(const std::string& host_id) const noexcept {
  return std::count_if(vms_.begin(), vms_.end(),
                       [&](const auto& kv) { return kv.second.host_id == host_id; });
}

CloudState apply_migration(const CloudState& state, const std::string& vm_id,
                           const std::string& dest_host) {
  const VmNode* vm = state.find_vm(vm_id);
  if (vm == nullptr) throw Error(ErrorCode::UnknownVm, "no vm '" + vm_id + "'");
  const Host* host = state.find_host(dest_host);
  if (host == nullptr) throw Error(ErrorCode::UnknownHost, "no host '" + dest_host + "'");
  if (vm->host_id == dest_host) {
    throw Error(ErrorCode::NoOpMigration, "vm '" + vm_id + "' already runs on '" + dest_host + "'");
  }
  if (state.host_load(dest_host) >= host->capacity) {
    throw Error(ErrorCode::CapacityExceeded, "host '" + dest_host + "' is full");
  }
  CloudState next = state;
  next.vms_.at(vm_id).host_id = dest_host;
  return next;
}

CloudState apply_patch(const CloudState& state, const std::string& vm_id,
                       const std::string& cve_id) {
  const bool is_target = vm_id == state.target_id();
  const VmNode* vm = is_target ? nullptr : state.find_vm(vm_id);
  if (!is_target && vm == nullptr) throw Error(ErrorCode::UnknownVm, "no vm '" + vm_id + "'");

  const AttackTree& tree = is_target ? state.target().attack_tree : vm->attack_tree;
  const Vulnerability* v = tree.find(cve_id);
  if (v == nullptr) {
    throw Error(ErrorCode::UnknownVulnerability, "'" + vm_id + "' has no vulnerability '" + cve_id + "'");
  }
  if (!v->patchable) throw Error(ErrorCode::NotPatchable, "'" + cve_id + "' is not patchable");

  CloudState next = state;
  if (is_target) {
    next.target_.attack_tree = tree.without(cve_id);
  } else {
    next.vms_.at(vm_id).attack_tree = tree.without(cve_id);
  }
  return next;
}

}  // namespace harmmtd
