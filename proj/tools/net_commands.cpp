#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "harmmtd/error.hpp"
#include "harmmtd/protocol/enterprise_client.hpp"
#include "harmmtd/protocol/net.hpp"
#include "harmmtd/protocol/provider.hpp"
#include "harmmtd/scenario.hpp"
#include "harmmtd/strategy.hpp"

namespace harmmtd::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kProviderPrivate = "provider_private.pem";
constexpr const char* kProviderPublic = "provider_public.pem";
constexpr const char* kEnterprisePrivate = "enterprise_private.pem";
constexpr const char* kSessionFile = "session.json";

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content, bool secret = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (secret) fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

void write_json_atomically(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, j.dump(2) + "\n");
  fs::rename(tmp, path);
}

crypto::KeyPair load_or_create(const fs::path& private_pem, const fs::path* public_pem) {
  if (fs::exists(private_pem)) return crypto::KeyPair::from_pem(read_file(private_pem));
  spdlog::info("generating RSA-2048 key {}", private_pem.string());
  crypto::KeyPair kp = crypto::KeyPair::generate();
  write_file(private_pem, kp.private_pem(), true);
  if (public_pem != nullptr) write_file(*public_pem, kp.public_key().pem());
  return kp;
}

std::string hex(crypto::ByteView b) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (auto c : b) {
    s.push_back(kHex[c >> 4]);
    s.push_back(kHex[c & 0xf]);
  }
  return s;
}

std::optional<crypto::SymmetricKey> unhex_key(const std::string& s) {
  crypto::SymmetricKey k{};
  if (s.size() != k.size() * 2) return std::nullopt;
  for (std::size_t i = 0; i < k.size(); ++i) {
    try {
      k[i] = static_cast<std::uint8_t>(std::stoul(s.substr(2 * i, 2), nullptr, 16));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return k;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  return s.substr(start);
}

// Cached shared key, valid only for the endpoint it was negotiated with.
std::optional<crypto::SymmetricKey> load_session(const fs::path& path, const std::string& endpoint) {
  if (!fs::exists(path)) return std::nullopt;
  const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("endpoint", "") != endpoint) return std::nullopt;
  return unhex_key(j.value("shared_key", ""));
}

void save_session(const fs::path& path, const std::string& endpoint, const crypto::SymmetricKey& key) {
  nlohmann::json j{{"endpoint", endpoint}, {"shared_key", hex(key)}};
  write_file(path, j.dump(2) + "\n", true);
}

bool retryable(const proto::AckResult& r) {
  return r.reason.rfind(to_string(ErrorCode::SignatureInvalid), 0) == 0 ||
         r.reason.rfind(to_string(ErrorCode::SessionExpired), 0) == 0;
}

int report_ack(const proto::AckResult& r) {
  if (r.success) {
    std::cout << "SUCCESS: " << r.reason << "\n";
    return kOk;
  }
  std::cout << "FAILURE: " << r.reason << "\n";
  return kRejected;
}

}  // namespace

int cmd_serve(const RunConfig& config) {
  return guarded([&] {
    const Scenario scenario = load_scenario(config.scenario_path);
    const fs::path pub = config.keys_dir / kProviderPublic;
    crypto::KeyPair keys = load_or_create(config.keys_dir / kProviderPrivate, &pub);
    if (!fs::exists(pub)) write_file(pub, keys.public_key().pem());
    auto enrollment = proto::EnrollmentTable::load(config.enrollment_path);

    proto::ProviderCore::Options opts;
    opts.idle_timeout = std::chrono::seconds(config.session_timeout_seconds);
    proto::ProviderCore core(std::move(keys), std::move(enrollment), scenario.cloud, opts);

    fs::create_directories(config.out_dir);
    const fs::path state_path = config.out_dir / "provider_state.json";
    auto persist = [&](const CloudState& state) {
      write_json_atomically(state_path, scenario_to_json(Scenario{scenario.ep_code, state, scenario.topology}));
    };
    persist(core.snapshot());
    core.on_commit(persist);

    net::Endpoint ep;
    try {
      ep = net::parse_endpoint(config.endpoint);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return static_cast<int>(kBadInput);
    }
    net::ProviderServer server(core, ep);
    write_file(config.out_dir / "serve.port", std::to_string(server.port()) + "\n");
    std::cout << "listening on " << ep.host << ":" << server.port() << std::endl;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    spdlog::info("shutting down");
    server.stop();
    return static_cast<int>(kOk);
  });
}

int cmd_request(const RunConfig& config) {
  return guarded([&] {
    const fs::path provider_pub = config.keys_dir / kProviderPublic;
    if (!fs::exists(provider_pub)) {
      throw Error(ErrorCode::Io, "provider public key not found at '" + provider_pub.string() + "'");
    }
    proto::KeyMaterial km;
    km.keypair = load_or_create(config.keys_dir / kEnterprisePrivate, nullptr);
    const crypto::PublicKey provider = crypto::PublicKey::from_pem(read_file(provider_pub));

    net::Endpoint ep;
    try {
      ep = net::parse_endpoint(config.endpoint);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return static_cast<int>(kBadInput);
    }

    if (!config.replay_transcript.empty()) {
      const std::string raw = read_file(config.replay_transcript);
      const crypto::Bytes frame(raw.begin(), raw.end());
      const wire::Frame decoded = wire::decode_frame(frame);
      proto::EnterpriseClient client(std::move(km), provider, decoded.suite);
      net::ProviderConnection conn(ep);
      spdlog::info("replaying {} bytes from {}", frame.size(), config.replay_transcript.string());
      return report_ack(client.accept_ack(conn.send_raw(frame)));
    }

    const Scenario scenario = load_scenario(config.scenario_path);
    km.ep_code = config.ep_code_file.empty() ? scenario.ep_code : trim(read_file(config.ep_code_file));
    if (km.ep_code.size() < proto::kMinEpCode || km.ep_code.size() > proto::kMaxEpCode) {
      throw Error(ErrorCode::InvalidScenario, "EP-code must be 8 to 64 bytes");
    }

    const fs::path strategy_path = config.strategy_path.empty() ? config.out_dir / "strategy.json" : config.strategy_path;
    const std::string strategy_text = trim(read_file(strategy_path));
    if (strategy_text.empty()) {
      std::cout << "NoThreat: no strategy to deploy\n";
      return static_cast<int>(kOk);
    }
    const auto sj = nlohmann::json::parse(strategy_text, nullptr, false);
    if (sj.is_discarded()) throw Error(ErrorCode::InvalidScenario, strategy_path.string() + ": not valid JSON");
    const Strategy strategy = strategy_from_json(sj);

    const fs::path session_path = config.keys_dir / kSessionFile;
    km.shared_key = load_session(session_path, config.endpoint);
    proto::EnterpriseClient client(std::move(km), provider, crypto::suite_from_name(config.suite));

    net::ProviderConnection conn(ep);
    auto register_now = [&] {
      const auto reply = conn.register_enterprise(client.build_registration_request(), client.suite());
      save_session(session_path, config.endpoint, client.accept_reply(reply));
      std::cout << "REGISTERED\n";
    };
    auto deploy = [&] {
      const proto::FurtherMessage msg = client.build_strategy_message(strategy);
      if (!config.save_transcript.empty()) {
        const crypto::Bytes bytes = wire::encode_frame(proto::to_frame(msg, client.suite()));
        write_file(config.save_transcript, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      }
      return client.accept_ack(conn.send_strategy(msg, client.suite()));
    };

    const bool cached = client.registered();
    if (!cached) register_now();
    proto::AckResult result = deploy();
    if (!result.success && cached && retryable(result)) {
      spdlog::info("cached session rejected ({}); registering again", result.reason);
      client.forget_shared_key();
      register_now();
      result = deploy();
    }
    return report_ack(result);
  });
}

}  // namespace harmmtd::cli
