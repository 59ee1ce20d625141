// harmmtd: cloud security situation-awareness and moving-target-defense toolkit.

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "commands.hpp"

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("harmmtd");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("HARMMTD_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  using harmmtd::cli::RunConfig;
  RunConfig config;
  std::string out_dir = config.out_dir.string();
  std::string scenario;
  std::string keys = config.keys_dir.string();
  std::string ep_code_file;
  std::string enrollment;
  std::string strategy;
  std::string save_transcript;
  std::string replay_transcript;
  std::size_t max_depth = config.limits.max_depth;
  std::size_t max_paths = config.limits.max_paths;
  bool no_coresidency = false;
  double threshold = 0.0;
  int interval = 0;
  int rounds = 0;

  CLI::App app{"Cloud risk analysis and moving target defense selection"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--scenario", scenario, "Scenario JSON file");
  app.add_option("--out-dir", out_dir, "Directory for reports and state files")->capture_default_str();
  app.add_option("--max-depth", max_depth, "Longest attack path allowed")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-paths", max_paths, "Most attack paths allowed")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--no-coresidency", no_coresidency, "Do not derive co-residency reachability");
  auto* threshold_opt = app.add_option("--threshold", threshold, "Acceptable cloud risk for the selected strategy");
  auto* interval_opt = app.add_option("--interval", interval, "Re-run selection every N seconds")->check(CLI::Range(1, 1 << 30));
  auto* rounds_opt = app.add_option("--rounds", rounds, "Stop periodic selection after N rounds")->check(CLI::PositiveNumber);
  app.add_option("--endpoint", config.endpoint, "Provider server host:port")->capture_default_str();
  app.add_option("--keys", keys, "Key directory")->capture_default_str();
  app.add_option("--ep-code-file", ep_code_file, "File holding the enterprise EP-code");
  app.add_option("--suite", config.suite, "Digest suite")
      ->check(CLI::IsMember({"md5-compat", "modern"}))
      ->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Build the model and compute CR, RoA and MAPL");
  auto* select = app.add_subcommand("select", "Evaluate every response and select the best one");
  auto* report = app.add_subcommand("report", "Write comparison and radar-data exports");
  auto* serve = app.add_subcommand("serve", "Run the cloud-provider protocol server");
  auto* request = app.add_subcommand("request", "Send the selected strategy to the provider");

  for (auto* sub : {select, request}) {
    sub->add_option("--strategy", strategy, "Strategy file (default <out-dir>/strategy.json)");
  }
  serve->add_option("--enrollment", enrollment, "Enrollment table JSON (ep_code -> tenant)")->required();
  serve->add_option("--session-timeout", config.session_timeout_seconds, "Idle session expiry in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  request->add_option("--save-transcript", save_transcript, "Write the sent strategy frame to FILE");
  request->add_option("--replay-transcript", replay_transcript, "Send a previously saved frame verbatim");

  CLI11_PARSE(app, argc, argv);

  config.scenario_path = scenario;
  config.out_dir = out_dir;
  config.keys_dir = keys;
  config.ep_code_file = ep_code_file;
  config.enrollment_path = enrollment;
  config.strategy_path = strategy;
  config.save_transcript = save_transcript;
  config.replay_transcript = replay_transcript;
  config.limits = {max_depth, max_paths};
  config.derive_coresidency = !no_coresidency;
  if (threshold_opt->count() > 0) config.threshold = threshold;
  if (interval_opt->count() > 0) config.interval_seconds = interval;
  if (rounds_opt->count() > 0) config.rounds = rounds;

  const bool needs_scenario = !(request->parsed() && !replay_transcript.empty());
  if (needs_scenario && scenario.empty()) {
    spdlog::error("--scenario is required");
    return harmmtd::cli::kBadInput;
  }

  if (analyze->parsed()) return harmmtd::cli::cmd_analyze(config);
  if (select->parsed()) return harmmtd::cli::cmd_select(config);
  if (report->parsed()) return harmmtd::cli::cmd_report(config);
  if (serve->parsed()) return harmmtd::cli::cmd_serve(config);
  return harmmtd::cli::cmd_request(config);
}
