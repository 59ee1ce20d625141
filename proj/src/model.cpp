#include "harmmtd/model.hpp"

#include <algorithm>

namespace harmmtd {

namespace {

// Strict "beats" relation for the OR gate: higher severity, then smaller id.
bool outranks(const Vulnerability& a, const Vulnerability& b) {
  const double sa = a.severity();
  const double sb = b.severity();
  if (sa != sb) return sa > sb;
  return a.cve_id < b.cve_id;
}

}  // namespace

AttackTree::AttackTree(std::vector<Vulnerability> leaves) : leaves_(std::move(leaves)) {}

const Vulnerability* AttackTree::effective_vulnerability() const noexcept {
  const Vulnerability* best = nullptr;
  for (const auto& v : leaves_) {
    if (best == nullptr || outranks(v, *best)) best = &v;
  }
  return best;
}

double AttackTree::effective_severity() const noexcept {
  const Vulnerability* v = effective_vulnerability();
  return v == nullptr ? 0.0 : v->severity();
}

const Vulnerability* AttackTree::effective_patchable() const noexcept {
  const Vulnerability* best = nullptr;
  for (const auto& v : leaves_) {
    if (!v.patchable) continue;
    if (best == nullptr || outranks(v, *best)) best = &v;
  }
  return best;
}

const Vulnerability* AttackTree::find(const std::string& cve_id) const noexcept {
  auto it = std::find_if(leaves_.begin(), leaves_.end(),
                         [&](const Vulnerability& v) { return v.cve_id == cve_id; });
  return it == leaves_.end() ? nullptr : &*it;
}

AttackTree AttackTree::without(const std::string& cve_id) const {
  std::vector<Vulnerability> kept;
  kept.reserve(leaves_.size());
  for (const auto& v : leaves_) {
    if (v.cve_id != cve_id) kept.push_back(v);
  }
  return AttackTree(std::move(kept));
}

double vm_risk(const VmNode& vm) noexcept { return vm.attack_tree.effective_severity(); }

}  // namespace harmmtd
