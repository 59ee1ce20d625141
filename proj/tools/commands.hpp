#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "harmmtd/harm.hpp"

namespace harmmtd::cli {

enum ExitCode : int {
  kOk = 0,
  kBadInput = 1,
  kPathExplosion = 2,
  kThresholdUnreachable = 3,
  kNetworkFailure = 4,
  kRejected = 5,
};

struct RunConfig {
  std::filesystem::path scenario_path;
  std::filesystem::path out_dir = ".";
  PathLimits limits;
  bool derive_coresidency = true;
  std::optional<double> threshold;
  std::optional<int> interval_seconds;  // periodic select
  std::optional<int> rounds;            // bound on periodic rounds; unbounded when unset
  std::string endpoint = "127.0.0.1:7788";
  std::filesystem::path keys_dir = "keys";
  std::filesystem::path ep_code_file;
  std::filesystem::path enrollment_path;
  std::filesystem::path strategy_path;  // default: <out-dir>/strategy.json
  std::string suite = "md5-compat";
  int session_timeout_seconds = 300;
  std::filesystem::path save_transcript;
  std::filesystem::path replay_transcript;
};

/// Runs `body`, translating library errors into the exit codes above.
int guarded(const std::function<int()>& body);

int cmd_analyze(const RunConfig& config);
int cmd_select(const RunConfig& config);
int cmd_report(const RunConfig& config);
int cmd_serve(const RunConfig& config);
int cmd_request(const RunConfig& config);

}  // namespace harmmtd::cli
