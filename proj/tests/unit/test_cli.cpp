#include <gtest/gtest.h>

#include <signal.h>
#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace std::chrono_literals;

extern char** environ;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("harmmtd_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (server_ > 0) stop_server();
    fs::remove_all(dir_);
  }

  pid_t spawn(const std::vector<std::string>& args, const fs::path& log) {
    std::vector<std::string> argv{HARMMTD_CLI_PATH};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<char*> cargs;
    for (auto& a : argv) cargs.push_back(a.data());
    cargs.push_back(nullptr);
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&fa, 1, 2);
    pid_t pid = -1;
    const int rc = posix_spawn(&pid, cargs[0], &fa, nullptr, cargs.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    EXPECT_EQ(rc, 0);
    return pid;
  }

  Outcome run(const std::vector<std::string>& args) {
    const fs::path log = dir_ / "run.log";
    const pid_t pid = spawn(args, log);
    int status = 0;
    ::waitpid(pid, &status, 0);
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(log);
    return r;
  }

  std::string start_server(const fs::path& keys) {
    const fs::path state = dir_ / "provider";
    fs::create_directories(state);
    server_ = spawn({"serve", "--scenario", fx::scenario_path("ep1.json").string(), "--enrollment",
                     fx::scenario_path("enrollment.json").string(), "--keys", keys.string(), "--out-dir",
                     state.string(), "--endpoint", "127.0.0.1:0"},
                    dir_ / "serve.log");
    const fs::path port_file = state / "serve.port";
    for (int i = 0; i < 300 && !fs::exists(port_file); ++i) std::this_thread::sleep_for(50ms);
    std::this_thread::sleep_for(50ms);
    std::string port = slurp(port_file);
    while (!port.empty() && std::isspace(static_cast<unsigned char>(port.back()))) port.pop_back();
    return "127.0.0.1:" + port;
  }

  void stop_server() {
    ::kill(server_, SIGTERM);
    int status = 0;
    ::waitpid(server_, &status, 0);
    server_ = -1;
  }

  nlohmann::json provider_state() const { return nlohmann::json::parse(slurp(dir_ / "provider" / "provider_state.json")); }

  static std::string host_of(const nlohmann::json& state, const std::string& vm) {
    for (const auto& v : state.at("vms"))
      if (v.at("vm_id") == vm) return v.at("host_id");
    return {};
  }

  fs::path dir_;
  pid_t server_ = -1;
};

}  // namespace

TEST_F(CliTest, AnalyzeExamplePath) {
  const Outcome r = run({"analyze", "--scenario", fx::scenario_path("single_path.json").string(), "--out-dir",
                     dir_.string()});
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("cloud_risk 7.080"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mapl 6.000"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "metrics.json"));
  const std::string first = slurp(dir_ / "metrics.json") + slurp(dir_ / "metrics.csv");
  ASSERT_EQ(run({"analyze", "--scenario", fx::scenario_path("single_path.json").string(), "--out-dir",
                 dir_.string()})
                .code,
            0);
  EXPECT_EQ(slurp(dir_ / "metrics.json") + slurp(dir_ / "metrics.csv"), first);
}

TEST_F(CliTest, ExitCodes) {
  const std::string ep1 = fx::scenario_path("ep1.json").string();
  EXPECT_EQ(run({"analyze", "--scenario", ep1, "--out-dir", dir_.string(), "--max-paths", "1"}).code, 2);
  EXPECT_EQ(run({"select", "--scenario", ep1, "--out-dir", dir_.string(), "--threshold", "0"}).code, 3);
  EXPECT_EQ(run({"analyze", "--scenario", (dir_ / "missing.json").string(), "--out-dir", dir_.string()}).code, 1);
  spit(dir_ / "bad.json", "{\n  \"hosts\": [\n");
  const Outcome bad = run({"analyze", "--scenario", (dir_ / "bad.json").string(), "--out-dir", dir_.string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("bad.json:"), std::string::npos) << bad.out;
  EXPECT_NE(run({"analyze", "--bogus-flag"}).code, 0);
}

TEST_F(CliTest, NoThreatWritesEmptyStrategy) {
  const auto s = fx::Builder().host("h1", 4).vm("a", "h1", fx::ubuntu(), false).target("db", "h1", fx::ubuntu()).build();
  spit(dir_ / "quiet.json", harmmtd::scenario_to_json(s).dump(2));
  const fs::path strategy = dir_ / "strategy.json";
  const Outcome r = run({"select", "--scenario", (dir_ / "quiet.json").string(), "--out-dir", dir_.string()});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("NoThreat"), std::string::npos) << r.out;
  ASSERT_TRUE(fs::exists(strategy));
  EXPECT_TRUE(slurp(strategy).empty());
}

TEST_F(CliTest, CoresidencyToggle) {
  const std::string ep1 = fx::scenario_path("ep1.json").string();
  auto paths = [](const std::string& out) { return std::stoul(out.substr(out.find("paths ") + 6)); };
  const Outcome with = run({"analyze", "--scenario", ep1, "--out-dir", dir_.string()});
  const Outcome without = run({"analyze", "--scenario", ep1, "--out-dir", dir_.string(), "--no-coresidency"});
  ASSERT_EQ(with.code, 0) << with.out;
  ASSERT_EQ(without.code, 0) << without.out;
  EXPECT_LE(paths(without.out), paths(with.out));
}

TEST_F(CliTest, SelectAndReport) {
  const std::string ep1 = fx::scenario_path("ep1.json").string();
  const Outcome r = run({"select", "--scenario", ep1, "--out-dir", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.out;
  const auto strategy = nlohmann::json::parse(slurp(dir_ / "strategy.json"));
  EXPECT_EQ(strategy.at("kind"), "LiveMigrate") << strategy.dump();
  ASSERT_EQ(run({"report", "--scenario", ep1, "--out-dir", dir_.string()}).code, 0);
  for (const char* f : {"comparison.csv", "comparison.json", "radar.json", "radar.csv"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
}

TEST_F(CliTest, ServeAndRequest) {
  const fs::path keys = dir_ / "keys";
  const std::string ep1 = fx::scenario_path("ep1.json").string();
  ASSERT_EQ(run({"select", "--scenario", ep1, "--out-dir", dir_.string()}).code, 0);
  const std::string endpoint = start_server(keys);
  ASSERT_TRUE(fs::exists(keys / "provider_public.pem"));
  const auto before = provider_state();
  EXPECT_EQ(host_of(before, "VM7"), "host-4");

  const fs::path transcript = dir_ / "sent.bin";
  const Outcome ok = run({"request", "--scenario", ep1, "--out-dir", dir_.string(), "--keys", keys.string(),
                      "--endpoint", endpoint, "--save-transcript", transcript.string()});
  ASSERT_EQ(ok.code, 0) << ok.out << slurp(dir_ / "serve.log");
  EXPECT_NE(ok.out.find("REGISTERED"), std::string::npos) << ok.out;
  EXPECT_NE(ok.out.find("SUCCESS"), std::string::npos) << ok.out;
  const auto after = provider_state();
  EXPECT_EQ(host_of(after, "VM7"), "host-2");

  const Outcome replay = run({"request", "--keys", keys.string(), "--endpoint", endpoint, "--replay-transcript",
                          transcript.string()});
  EXPECT_EQ(replay.code, 5) << replay.out;
  EXPECT_NE(replay.out.find("ReplayedNonce"), std::string::npos) << replay.out;
  EXPECT_EQ(provider_state(), after);

  const fs::path stranger = dir_ / "stranger";
  fs::create_directories(stranger);
  fs::copy_file(keys / "provider_public.pem", stranger / "provider_public.pem");
  spit(dir_ / "wrong.code", "NOT-ENROLLED-CODE\n");
  const Outcome denied = run({"request", "--scenario", ep1, "--out-dir", dir_.string(), "--keys", stranger.string(),
                          "--endpoint", endpoint, "--ep-code-file", (dir_ / "wrong.code").string()});
  EXPECT_EQ(denied.code, 5) << denied.out;
  EXPECT_NE(denied.out.find("RegistrationDenied"), std::string::npos) << denied.out;
  EXPECT_EQ(provider_state(), after);
}

TEST_F(CliTest, RequestWithoutProviderKeyIsBadInput) {
  const std::string ep1 = fx::scenario_path("ep1.json").string();
  ASSERT_EQ(run({"select", "--scenario", ep1, "--out-dir", dir_.string()}).code, 0);
  EXPECT_EQ(run({"request", "--scenario", ep1, "--out-dir", dir_.string(), "--keys", (dir_ / "none").string(),
                 "--endpoint", "127.0.0.1:1"})
                .code,
            1);
}

TEST_F(CliTest, RefusedConnectionIsNetworkExit) {
  const fs::path keys = dir_ / "keys";
  const std::string ep1 = fx::scenario_path("ep1.json").string();
  ASSERT_EQ(run({"select", "--scenario", ep1, "--out-dir", dir_.string()}).code, 0);
  const std::string endpoint = start_server(keys);
  stop_server();
  const Outcome r = run({"request", "--scenario", ep1, "--out-dir", dir_.string(), "--keys", keys.string(),
                     "--endpoint", endpoint});
  EXPECT_EQ(r.code, 4) << r.out;
}
