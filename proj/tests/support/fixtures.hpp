#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "harmmtd/error.hpp"
#include "harmmtd/protocol/crypto.hpp"
#include "harmmtd/scenario.hpp"

namespace fx {

std::filesystem::path scenario_path(std::string_view file);
harmmtd::Scenario load(std::string_view file);

// Windows 10 pair and the Ubuntu triple used throughout the running example.
harmmtd::Vulnerability v1();
harmmtd::Vulnerability v2();
harmmtd::Vulnerability v3();
harmmtd::Vulnerability v4();
harmmtd::Vulnerability v5();
std::vector<harmmtd::Vulnerability> windows();
std::vector<harmmtd::Vulnerability> ubuntu();

class Builder {
 public:
  Builder& host(std::string id, std::int64_t capacity);
  Builder& vm(std::string id, std::string host, std::vector<harmmtd::Vulnerability> vulns,
              bool internet = false, std::string tenant = "T1");
  Builder& target(std::string id, std::string host, std::vector<harmmtd::Vulnerability> vulns,
                  std::string tenant = "");
  Builder& edge(std::string from, std::string to);
  harmmtd::Scenario build() const;

 private:
  std::vector<harmmtd::Host> hosts_;
  std::vector<harmmtd::VmNode> vms_;
  harmmtd::TargetNode target_;
  harmmtd::TopologyDecl topo_;
};

/// Code of the harmmtd::Error thrown by f, nullopt when nothing is thrown.
std::optional<harmmtd::ErrorCode> code_of(const std::function<void()>& f);

/// RSA keygen is slow enough to cache across tests.
const harmmtd::crypto::KeyPair& provider_keys();
const harmmtd::crypto::KeyPair& enterprise_keys(std::size_t index);

}  // namespace fx
