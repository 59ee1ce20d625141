#include "harmmtd/protocol/provider.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"

namespace harmmtd::proto {

EnrollmentTable EnrollmentTable::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("enrollments") || !j["enrollments"].is_array()) {
    throw Error(ErrorCode::InvalidScenario, "enrollment file must hold an \"enrollments\" array");
  }
  EnrollmentTable t;
  for (const auto& e : j["enrollments"]) {
    if (!e.is_object() || !e.contains("ep_code") || !e.contains("tenant") || !e["ep_code"].is_string() ||
        !e["tenant"].is_string()) {
      throw Error(ErrorCode::InvalidScenario, "enrollment entries need string ep_code and tenant");
    }
    const auto code = e["ep_code"].get<std::string>();
    if (code.size() < kMinEpCode || code.size() > kMaxEpCode) {
      throw Error(ErrorCode::InvalidScenario, "EP-code for tenant '" + e["tenant"].get<std::string>() +
                                                  "' must be 8 to 64 bytes");
    }
    if (!t.tenant_by_code.emplace(code, e["tenant"].get<std::string>()).second) {
      throw Error(ErrorCode::DuplicateId, "EP-code listed twice");
    }
  }
  return t;
}

EnrollmentTable EnrollmentTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ProviderCore::ProviderCore(crypto::KeyPair keys, EnrollmentTable enrollment, CloudState state, Options options)
    : keys_(std::move(keys)),
      enrollment_(std::move(enrollment)),
      options_(std::move(options)),
      state_(std::move(state)) {}

std::chrono::steady_clock::time_point ProviderCore::now() const {
  return options_.clock ? options_.clock() : std::chrono::steady_clock::now();
}

ReplyMessage ProviderCore::process_registration(const RegistrationRequest& req, crypto::Suite suite) {
  Bytes plaintext;
  try {
    plaintext = crypto::open(keys_, req.ciphertext);
  } catch (const Error&) {
    throw Error(ErrorCode::ProtocolError, "registration request does not decrypt");
  }
  const auto fields = wire::decode_fields(plaintext, 2);
  const std::string ep_code = wire::to_text(fields[0]);
  const crypto::PublicKey enterprise_key = crypto::PublicKey::from_der(fields[1]);

  ReplyMessage reply;
  const auto it = enrollment_.tenant_by_code.find(ep_code);
  if (it == enrollment_.tenant_by_code.end()) {
    spdlog::warn("registration denied: unknown EP-code");
    reply.ack = kDenied;
  } else {
    Session s;
    s.info.tenant = it->second;
    s.info.enterprise_key = enterprise_key;
    s.info.shared_key = crypto::random_key();
    s.last_active = now();
    reply.enc_shared_key = crypto::seal(enterprise_key, s.info.shared_key);
    reply.ack = kRegistered;
    {
      std::lock_guard lock(session_mutex_);
      s.info.id = ++session_counter_;
      spdlog::info("tenant {} registered, session {}", s.info.tenant, s.info.id);
      sessions_[s.info.tenant] = std::move(s);
    }
  }
  reply.signature_block = make_signature_block(keys_, suite, covered_bytes(reply));
  return reply;
}

AckMessage ProviderCore::make_ack(crypto::Suite suite, bool ok, const std::string& reason,
                                  ByteView in_reply_to) const {
  AckMessage ack;
  ack.status = ok ? kSuccess : kFailure;
  ack.reason = reason;
  ack.in_reply_to.assign(in_reply_to.begin(), in_reply_to.end());
  ack.signature_block = make_signature_block(keys_, suite, covered_bytes(ack));
  return ack;
}

void ProviderCore::authorize(const std::string& tenant, const Strategy& s, const CloudState& state) const {
  if (const VmNode* vm = state.find_vm(s.vm_id)) {
    if (vm->tenant == tenant) return;
    throw Error(ErrorCode::Unauthorized, "tenant " + tenant + " does not own " + s.vm_id);
  }
  if (s.vm_id == state.target_id()) {
    if (!state.target().tenant.empty() && state.target().tenant == tenant) return;
    throw Error(ErrorCode::Unauthorized, "tenant " + tenant + " does not own " + s.vm_id);
  }
  throw Error(ErrorCode::UnknownVm, "unknown vm '" + s.vm_id + "'");
}

StrategyOutcome ProviderCore::process_strategy(const FurtherMessage& msg, crypto::Suite suite) {
  StrategyOutcome out;
  Nonce zero{};
  ByteView in_reply_to(zero);

  auto reject_error = [&](const Error& e) {
    spdlog::warn("strategy rejected{}: {}", out.tenant.empty() ? "" : " for " + out.tenant, e.what());
    out.rejection = e.code();
    out.ack = make_ack(suite, false, e.what(), in_reply_to);
    return out;
  };
  auto reject = [&](ErrorCode code, const std::string& why) { return reject_error(Error(code, why)); };

  SignatureBlock block;
  try {
    block = parse_signature_block(suite, msg.signature_block);
  } catch (const Error&) {
    return reject(ErrorCode::ProtocolError, "malformed signature block");
  }
  in_reply_to = ByteView(block.nonce);

  std::vector<SessionInfo> candidates;
  {
    std::lock_guard lock(session_mutex_);
    for (const auto& [tenant, s] : sessions_) candidates.push_back(s.info);
  }
  const SessionInfo* sender = nullptr;
  for (const auto& c : candidates) {
    if (signature_matches(c.enterprise_key, block)) {
      sender = &c;
      break;
    }
  }
  if (sender == nullptr) return reject(ErrorCode::SignatureInvalid, "signature matches no registered tenant");
  out.tenant = sender->tenant;
  if (!digest_matches(suite, block, covered_bytes(msg))) {
    return reject(ErrorCode::DigestMismatch, "message digest mismatch");
  }

  {
    std::lock_guard lock(session_mutex_);
    auto it = sessions_.find(sender->tenant);
    if (it == sessions_.end() || it->second.info.id != sender->id) {
      return reject(ErrorCode::SessionExpired, "session was replaced");
    }
    Session& s = it->second;
    if (now() - s.last_active > options_.idle_timeout) {
      sessions_.erase(it);
      return reject(ErrorCode::SessionExpired, "session idle too long");
    }
    if (!s.seen.insert(block.nonce).second) return reject(ErrorCode::ReplayedNonce, "nonce already used");
    s.last_active = now();
  }

  Strategy strategy;
  try {
    const Bytes json = crypto::aead_open(sender->shared_key, msg.enc_payload);
    const auto parsed = nlohmann::json::parse(json.begin(), json.end(), nullptr, false);
    if (parsed.is_discarded()) return reject(ErrorCode::ProtocolError, "payload is not JSON");
    strategy = strategy_from_json(parsed);
  } catch (const Error& e) {
    return reject_error(e);
  }

  try {
    std::lock_guard lock(state_mutex_);
    authorize(sender->tenant, strategy, state_);
    CloudState next = apply_strategy(state_, strategy);
    if (commit_hook_) commit_hook_(next);
    state_ = std::move(next);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Unauthorized) return reject_error(e);
    return reject(ErrorCode::ExecutionFailed, e.what());
  }

  spdlog::info("executed {} on {} for {}", to_string(strategy.kind), strategy.vm_id, sender->tenant);
  out.ack = make_ack(suite, true, "executed", in_reply_to);
  return out;
}

CloudState ProviderCore::snapshot() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

std::optional<SessionInfo> ProviderCore::session_for(const std::string& tenant) const {
  std::lock_guard lock(session_mutex_);
  const auto it = sessions_.find(tenant);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.info;
}

std::uint64_t ProviderCore::sessions_created() const {
  std::lock_guard lock(session_mutex_);
  return session_counter_;
}

void ProviderCore::on_commit(std::function<void(const CloudState&)> hook) {
  std::lock_guard lock(state_mutex_);
  commit_hook_ = std::move(hook);
}

}  // namespace harmmtd::proto
