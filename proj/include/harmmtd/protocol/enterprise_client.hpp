#pragma once

#include <optional>
#include <set>
#include <string>

#include "harmmtd/protocol/crypto.hpp"
#include "harmmtd/protocol/messages.hpp"
#include "harmmtd/strategy.hpp"

namespace harmmtd::proto {

struct KeyMaterial {
  crypto::KeyPair keypair;
  std::string ep_code;
  std::optional<crypto::SymmetricKey> shared_key;
};

struct AckResult {
  bool success = false;
  std::string reason;
};

/// Enterprise side of registration and strategy deployment. Not thread-safe.
class EnterpriseClient {
 public:
  EnterpriseClient(KeyMaterial keys, crypto::PublicKey provider, crypto::Suite suite);

  const KeyMaterial& keys() const noexcept { return keys_; }
  crypto::Suite suite() const noexcept { return suite_; }
  bool registered() const noexcept { return keys_.shared_key.has_value(); }
  void forget_shared_key() noexcept { keys_.shared_key.reset(); }

  /// Throws std::invalid_argument for an ep_code outside 8..64 bytes.
  RegistrationRequest build_registration_request() const;

  /// Verifies a reply and stores the shared key. Throws SignatureInvalid,
  /// DigestMismatch, ReplayedNonce, RegistrationDenied or DecryptionFailure.
  const crypto::SymmetricKey& accept_reply(const ReplyMessage& reply);

  /// Encrypts and signs a strategy. Throws ProtocolError when unregistered.
  FurtherMessage build_strategy_message(const Strategy& s);
  FurtherMessage build_payload_message(ByteView payload);

  /// Verifies an ack signed by the provider.
  AckResult accept_ack(const AckMessage& ack);

 private:
  KeyMaterial keys_;
  crypto::PublicKey provider_;
  crypto::Suite suite_;
  std::set<Nonce> seen_;  // provider nonces already accepted
};

}  // namespace harmmtd::proto
