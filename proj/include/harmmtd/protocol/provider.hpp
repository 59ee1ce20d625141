#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "harmmtd/cloud.hpp"
#include "harmmtd/error.hpp"
#include "harmmtd/protocol/crypto.hpp"
#include "harmmtd/protocol/messages.hpp"
#include "harmmtd/strategy.hpp"

namespace harmmtd::proto {

/// EP-code -> tenant.
struct EnrollmentTable {
  std::map<std::string, std::string> tenant_by_code;

  /// {"enrollments": [{"ep_code": "...", "tenant": "..."}]}; throws InvalidScenario.
  static EnrollmentTable from_json(const std::string& text);
  static EnrollmentTable load(const std::filesystem::path& path);
};

struct StrategyOutcome {
  AckMessage ack;
  std::string tenant;                 // empty when the sender was not identified
  std::optional<ErrorCode> rejection;  // empty on SUCCESS
};

struct SessionInfo {
  std::uint64_t id = 0;
  std::string tenant;
  crypto::PublicKey enterprise_key;
  crypto::SymmetricKey shared_key{};
};

/// Provider side: registration, session tracking and strategy execution
/// against the authoritative cloud state. Thread-safe.
class ProviderCore {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  struct Options {
    std::chrono::seconds idle_timeout{300};
    Clock clock;  // steady_clock::now when empty
  };

  ProviderCore(crypto::KeyPair keys, EnrollmentTable enrollment, CloudState state, Options options);
  ProviderCore(crypto::KeyPair keys, EnrollmentTable enrollment, CloudState state)
      : ProviderCore(std::move(keys), std::move(enrollment), std::move(state), Options{}) {}

  crypto::PublicKey public_key() const { return keys_.public_key(); }

  /// Throws ProtocolError when the request cannot be decrypted or parsed.
  ReplyMessage process_registration(const RegistrationRequest& req, crypto::Suite suite);

  /// Always returns a signed ack; failures are reported as FAILURE.
  StrategyOutcome process_strategy(const FurtherMessage& msg, crypto::Suite suite);

  CloudState snapshot() const;
  std::optional<SessionInfo> session_for(const std::string& tenant) const;
  std::uint64_t sessions_created() const;

  /// Called with the new state after each committed strategy, under the commit lock.
  void on_commit(std::function<void(const CloudState&)> hook);

 private:
  struct Session {
    SessionInfo info;
    std::set<Nonce> seen;
    std::chrono::steady_clock::time_point last_active;
  };

  std::chrono::steady_clock::time_point now() const;
  AckMessage make_ack(crypto::Suite suite, bool ok, const std::string& reason, ByteView in_reply_to) const;
  void authorize(const std::string& tenant, const Strategy& s, const CloudState& state) const;

  crypto::KeyPair keys_;
  EnrollmentTable enrollment_;
  Options options_;

  mutable std::mutex session_mutex_;
  std::map<std::string, Session> sessions_;  // by tenant
  std::uint64_t session_counter_ = 0;

  mutable std::mutex state_mutex_;
  CloudState state_;
  std::function<void(const CloudState&)> commit_hook_;
};

}  // namespace harmmtd::proto
