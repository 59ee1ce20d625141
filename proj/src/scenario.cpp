#include "harmmtd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "harmmtd/error.hpp"

namespace harmmtd {

using nlohmann::json;

namespace {

// Input iterator that publishes how far the JSON lexer has read, so SAX
// callbacks can be tied back to a source offset.
class TrackingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator() = default;
  TrackingIterator(const char* p, const char** cursor) : p_(p), cursor_(cursor) {}

  reference operator*() const {
    if (cursor_ != nullptr) *cursor_ = p_;
    return *p_;
  }
  TrackingIterator& operator++() {
    ++p_;
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++p_;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const TrackingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_ = nullptr;
  const char** cursor_ = nullptr;
};

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Records the source offset at which every JSON value starts, keyed by JSON
// pointer.
class OffsetRecorder : public nlohmann::json_sax<json> {
 public:
  OffsetRecorder(const char* begin, const char** cursor) : begin_(begin), cursor_(cursor) {}

  std::map<std::string, std::size_t> offsets;

  bool null() override { return scalar(); }
  bool boolean(bool) override { return scalar(); }
  bool number_integer(number_integer_t) override { return scalar(); }
  bool number_unsigned(number_unsigned_t) override { return scalar(); }
  bool number_float(number_float_t, const string_t&) override { return scalar(); }
  bool string(string_t&) override { return scalar(); }
  bool binary(binary_t&) override { return scalar(); }
  bool start_object(std::size_t) override { return open(false); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(true); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    frames_.back().key = k;
    offsets[frames_.back().pointer + "/" + escape_pointer_token(k)] = offset();
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  struct Frame {
    std::string pointer;
    bool array = false;
    std::size_t next_index = 0;
    std::string key;
  };

  std::size_t offset() const {
    return *cursor_ == nullptr ? 0 : static_cast<std::size_t>(*cursor_ - begin_);
  }

  std::string next_pointer() {
    if (frames_.empty()) return "";
    Frame& top = frames_.back();
    if (top.array) return top.pointer + "/" + std::to_string(top.next_index++);
    return top.pointer + "/" + escape_pointer_token(top.key);
  }

  bool scalar() {
    std::string ptr = next_pointer();
    // Keys already carry the key's own position; keep the earliest anchor.
    offsets.try_emplace(ptr, offset());
    return true;
  }
  bool open(bool array) {
    std::string ptr = next_pointer();
    offsets.try_emplace(ptr, offset());
    frames_.push_back(Frame{std::move(ptr), array, 0, {}});
    return true;
  }
  bool close() {
    frames_.pop_back();
    return true;
  }

  const char* begin_;
  const char** cursor_;
  std::vector<Frame> frames_;
};

class SourceMap {
 public:
  SourceMap(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  std::string where(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return source_ + ":" + std::to_string(line) + ":" + std::to_string(col);
  }

  const std::string& source() const { return source_; }

 private:
  std::string_view text_;
  std::string source_;
};

class ScenarioReader {
 public:
  ScenarioReader(const json& root, const SourceMap& map, std::map<std::string, std::size_t> offsets)
      : root_(root), map_(map), offsets_(std::move(offsets)) {}

  Scenario read() {
    if (!root_.is_object()) fail(ErrorCode::InvalidScenario, "", "top level must be an object");

    const json& hosts_json = member(root_, "", "hosts", json::value_t::array);
    std::vector<Host> hosts;
    std::set<std::string> host_ids;
    for (std::size_t i = 0; i < hosts_json.size(); ++i) {
      const std::string ptr = "/hosts/" + std::to_string(i);
      const json& h = object_at(hosts_json[i], ptr);
      Host host;
      host.host_id = require_string(h, ptr, "id");
      const json& cap = member(h, ptr, "capacity", json::value_t::number_integer);
      if (!cap.is_number_integer() || cap.get<std::int64_t>() < 0) {
        fail(ErrorCode::InvalidScenario, ptr + "/capacity", "capacity must be an integer >= 0");
      }
      host.capacity = cap.get<std::int64_t>();
      if (!host_ids.insert(host.host_id).second) {
        fail(ErrorCode::DuplicateId, ptr + "/id", "duplicate host id '" + host.host_id + "'");
      }
      hosts.push_back(std::move(host));
    }

    const json& target_json = root_.contains("target") ? root_.at("target") : json();
    if (target_json.is_null()) fail(ErrorCode::MissingTarget, "", "missing key 'target'");
    const json& t = object_at(target_json, "/target");
    TargetNode target;
    target.id = require_string(t, "/target", "id");
    target.host_id = require_string(t, "/target", "host_id");
    target.tenant = optional_string(t, "/target", "tenant", "");
    check_reserved(target.id, "/target/id");
    check_host(host_ids, target.host_id, "/target/host_id");
    target.attack_tree = read_tree(t, "/target");

    const json& vms_json = member(root_, "", "vms", json::value_t::array);
    std::vector<VmNode> vms;
    std::set<std::string> vm_ids;
    std::map<std::string, std::int64_t> load;
    for (std::size_t i = 0; i < vms_json.size(); ++i) {
      const std::string ptr = "/vms/" + std::to_string(i);
      const json& v = object_at(vms_json[i], ptr);
      VmNode vm;
      vm.vm_id = require_string(v, ptr, "vm_id");
      vm.display_name = optional_string(v, ptr, "display_name", vm.vm_id);
      vm.os_label = optional_string(v, ptr, "os_label", "");
      vm.tenant = require_string(v, ptr, "tenant");
      vm.host_id = require_string(v, ptr, "host_id");
      vm.internet_facing = optional_bool(v, ptr, "internet_facing", false);
      vm.attack_tree = read_tree(v, ptr);
      check_reserved(vm.vm_id, ptr + "/vm_id");
      check_host(host_ids, vm.host_id, ptr + "/host_id");
      if (vm.vm_id == target.id || !vm_ids.insert(vm.vm_id).second) {
        fail(ErrorCode::DuplicateId, ptr + "/vm_id", "duplicate node id '" + vm.vm_id + "'");
      }
      if (++load[vm.host_id] > capacity_of(hosts, vm.host_id)) {
        fail(ErrorCode::CapacityExceeded, ptr + "/host_id",
             "host '" + vm.host_id + "' is over capacity");
      }
      vms.push_back(std::move(vm));
    }

    TopologyDecl topology;
    if (root_.contains("edges")) {
      const json& edges = member(root_, "", "edges", json::value_t::array);
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string ptr = "/edges/" + std::to_string(i);
        const json& e = object_at(edges[i], ptr);
        DeclaredEdge edge{require_string(e, ptr, "from"), require_string(e, ptr, "to")};
        if (!vm_ids.contains(edge.from)) {
          fail(edge.from == target.id ? ErrorCode::InvalidScenario : ErrorCode::DanglingReference,
               ptr + "/from",
               edge.from == target.id ? "edges may not leave the target"
                                      : "unknown vm '" + edge.from + "'");
        }
        if (!vm_ids.contains(edge.to) && edge.to != target.id) {
          fail(ErrorCode::DanglingReference, ptr + "/to", "unknown node '" + edge.to + "'");
        }
        if (edge.from == edge.to) fail(ErrorCode::InvalidScenario, ptr, "self-loop on '" + edge.from + "'");
        topology.edges.push_back(std::move(edge));
      }
    }

    Scenario s;
    s.ep_code = optional_string(root_, "", "ep_code", "");
    try {
      s.cloud = CloudState(std::move(hosts), std::move(vms), std::move(target));
    } catch (const Error& e) {
      throw Error(e.code(), map_.source() + ": " + e.what());
    }
    s.topology = std::move(topology);
    return s;
  }

 private:
  [[noreturn]] void fail(ErrorCode code, const std::string& ptr, const std::string& msg) const {
    // Fall back to the nearest enclosing value that has a recorded position.
    std::string probe = ptr;
    std::size_t offset = 0;
    for (;;) {
      auto it = offsets_.find(probe);
      if (it != offsets_.end()) {
        offset = it->second;
        break;
      }
      if (probe.empty()) break;
      probe.erase(probe.rfind('/'));
    }
    throw Error(code, map_.where(offset) + ": " + (ptr.empty() ? "/" : ptr) + ": " + msg);
  }

  const json& object_at(const json& j, const std::string& ptr) const {
    if (!j.is_object()) fail(ErrorCode::InvalidScenario, ptr, "expected an object");
    return j;
  }

  const json& member(const json& obj, const std::string& ptr, const char* key,
                     json::value_t type) const {
    if (!obj.contains(key)) fail(ErrorCode::InvalidScenario, ptr, std::string("missing key '") + key + "'");
    const json& v = obj.at(key);
    const bool ok = type == json::value_t::number_integer ? v.is_number() : v.type() == type;
    if (!ok) fail(ErrorCode::InvalidScenario, ptr + "/" + key, std::string("wrong type for '") + key + "'");
    return v;
  }

  std::string require_string(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = member(obj, ptr, key, json::value_t::string);
    std::string s = v.get<std::string>();
    if (s.empty()) fail(ErrorCode::InvalidScenario, ptr + "/" + key, std::string("'") + key + "' is empty");
    return s;
  }

  std::string optional_string(const json& obj, const std::string& ptr, const char* key,
                              const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    return member(obj, ptr, key, json::value_t::string).get<std::string>();
  }

  bool optional_bool(const json& obj, const std::string& ptr, const char* key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    return member(obj, ptr, key, json::value_t::boolean).get<bool>();
  }

  double number(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = member(obj, ptr, key, json::value_t::number_integer);
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ErrorCode::InvalidScenario, ptr + "/" + key, "not a finite number");
    return d;
  }

  AttackTree read_tree(const json& owner, const std::string& owner_ptr) const {
    std::vector<Vulnerability> leaves;
    if (!owner.contains("vulnerabilities")) return AttackTree{};
    const json& list = member(owner, owner_ptr, "vulnerabilities", json::value_t::array);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ptr = owner_ptr + "/vulnerabilities/" + std::to_string(i);
      const json& j = object_at(list[i], ptr);
      Vulnerability v;
      v.cve_id = require_string(j, ptr, "cve_id");
      v.base_score = j.contains("base_score") ? number(j, ptr, "base_score") : 0.0;
      v.exploitability = number(j, ptr, "exploitability");
      v.impact = number(j, ptr, "impact");
      v.attack_cost = j.contains("attack_cost") ? number(j, ptr, "attack_cost") : 1.0;
      v.patchable = optional_bool(j, ptr, "patchable", true);
      if (v.base_score < 0.0 || v.base_score > 10.0) {
        fail(ErrorCode::InvalidScenario, ptr + "/base_score", "base_score must be in [0, 10]");
      }
      if (v.exploitability < 0.0) {
        fail(ErrorCode::InvalidScenario, ptr + "/exploitability", "exploitability must be >= 0");
      }
      if (v.impact < 0.0 || v.impact > 10.0) {
        fail(ErrorCode::InvalidScenario, ptr + "/impact", "impact must be in [0, 10]");
      }
      if (!(v.attack_cost > 0.0)) {
        fail(ErrorCode::InvalidScenario, ptr + "/attack_cost", "attack_cost must be > 0");
      }
      if (!seen.insert(v.cve_id).second) {
        fail(ErrorCode::DuplicateId, ptr + "/cve_id", "duplicate vulnerability '" + v.cve_id + "'");
      }
      leaves.push_back(std::move(v));
    }
    return AttackTree(std::move(leaves));
  }

  void check_reserved(const std::string& id, const std::string& ptr) const {
    if (id.front() == '@') fail(ErrorCode::InvalidScenario, ptr, "ids starting with '@' are reserved");
  }

  void check_host(const std::set<std::string>& hosts, const std::string& id, const std::string& ptr) const {
    if (!hosts.contains(id)) fail(ErrorCode::DanglingReference, ptr, "unknown host '" + id + "'");
  }

  static std::int64_t capacity_of(const std::vector<Host>& hosts, const std::string& id) {
    for (const auto& h : hosts) {
      if (h.host_id == id) return h.capacity;
    }
    return 0;
  }

  const json& root_;
  const SourceMap& map_;
  std::map<std::string, std::size_t> offsets_;
};

json tree_to_json(const AttackTree& tree) {
  json out = json::array();
  for (const auto& v : tree.leaves()) {
    out.push_back({{"cve_id", v.cve_id},
                   {"base_score", v.base_score},
                   {"exploitability", v.exploitability},
                   {"impact", v.impact},
                   {"attack_cost", v.attack_cost},
                   {"patchable", v.patchable}});
  }
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source_name) {
  SourceMap map(text, source_name);
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    throw Error(ErrorCode::InvalidScenario, map.where(offset) + ": malformed JSON: " + e.what());
  }

  const char* cursor = nullptr;
  OffsetRecorder recorder(text.data(), &cursor);
  json::sax_parse(TrackingIterator(text.data(), &cursor),
                  TrackingIterator(text.data() + text.size(), &cursor), &recorder);
  return ScenarioReader(root, map, std::move(recorder.offsets)).read();
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

json cloud_to_json(const CloudState& cloud) {
  json hosts = json::array();
  for (const auto& h : cloud.hosts()) hosts.push_back({{"id", h.host_id}, {"capacity", h.capacity}});
  json vms = json::array();
  for (const auto& [id, vm] : cloud.vms()) {
    vms.push_back({{"vm_id", vm.vm_id},
                   {"display_name", vm.display_name},
                   {"os_label", vm.os_label},
                   {"tenant", vm.tenant},
                   {"host_id", vm.host_id},
                   {"internet_facing", vm.internet_facing},
                   {"vulnerabilities", tree_to_json(vm.attack_tree)}});
  }
  const TargetNode& t = cloud.target();
  json target = {{"id", t.id}, {"host_id", t.host_id}, {"vulnerabilities", tree_to_json(t.attack_tree)}};
  if (!t.tenant.empty()) target["tenant"] = t.tenant;
  return {{"hosts", std::move(hosts)}, {"vms", std::move(vms)}, {"target", std::move(target)}};
}

json scenario_to_json(const Scenario& scenario) {
  json out = cloud_to_json(scenario.cloud);
  json edges = json::array();
  for (const auto& e : scenario.topology.edges) edges.push_back({{"from", e.from}, {"to", e.to}});
  out["edges"] = std::move(edges);
  out["ep_code"] = scenario.ep_code;
  return out;
}

}  // namespace harmmtd
