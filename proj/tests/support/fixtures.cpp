#include "fixtures.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace fx {

using namespace harmmtd;

std::filesystem::path scenario_path(std::string_view file) {
  return std::filesystem::path(HARMMTD_SCENARIO_DIR) / std::string(file);
}

Scenario load(std::string_view file) { return load_scenario(scenario_path(file)); }

Vulnerability v1() { return {"CVE-2018-8490", 7.8, 0.17, 6.0, 1.0, true}; }
Vulnerability v2() { return {"CVE-2018-8484", 7.8, 0.18, 5.9, 1.0, true}; }
Vulnerability v3() { return {"CVE-2018-14678", 7.8, 0.18, 5.9, 1.0, true}; }
Vulnerability v4() { return {"CVE-2018-14633", 7.0, 0.22, 4.7, 1.0, true}; }
Vulnerability v5() { return {"CVE-2018-15126", 9.8, 0.22, 5.9, 1.0, true}; }
std::vector<Vulnerability> windows() { return {v1(), v2()}; }
std::vector<Vulnerability> ubuntu() { return {v3(), v4(), v5()}; }

Builder& Builder::host(std::string id, std::int64_t capacity) {
  hosts_.push_back({std::move(id), capacity});
  return *this;
}

Builder& Builder::vm(std::string id, std::string host, std::vector<Vulnerability> vulns, bool internet,
                     std::string tenant) {
  VmNode v;
  v.vm_id = id;
  v.display_name = std::move(id);
  v.os_label = "test";
  v.tenant = std::move(tenant);
  v.host_id = std::move(host);
  v.internet_facing = internet;
  v.attack_tree = AttackTree(std::move(vulns));
  vms_.push_back(std::move(v));
  return *this;
}

Builder& Builder::target(std::string id, std::string host, std::vector<Vulnerability> vulns, std::string tenant) {
  target_.id = std::move(id);
  target_.host_id = std::move(host);
  target_.tenant = std::move(tenant);
  target_.attack_tree = AttackTree(std::move(vulns));
  return *this;
}

Builder& Builder::edge(std::string from, std::string to) {
  topo_.edges.push_back({std::move(from), std::move(to)});
  return *this;
}

Scenario Builder::build() const {
  auto hosts = hosts_;
  std::sort(hosts.begin(), hosts.end(), [](const Host& a, const Host& b) { return a.host_id < b.host_id; });
  Scenario s;
  s.ep_code = "TEST-EP-CODE";
  s.cloud = CloudState(std::move(hosts), vms_, target_);
  s.topology = topo_;
  return s;
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

const crypto::KeyPair& provider_keys() {
  static const crypto::KeyPair k = crypto::KeyPair::generate();
  return k;
}

const crypto::KeyPair& enterprise_keys(std::size_t index) {
  static std::mutex m;
  static std::map<std::size_t, crypto::KeyPair> pool;
  std::lock_guard lock(m);
  auto it = pool.find(index);
  if (it == pool.end()) it = pool.emplace(index, crypto::KeyPair::generate()).first;
  return it->second;
}

}  // namespace fx
