#include "harmmtd/protocol/enterprise_client.hpp"

#include <algorithm>
#include <stdexcept>

#include "harmmtd/error.hpp"

namespace harmmtd::proto {

EnterpriseClient::EnterpriseClient(KeyMaterial keys, crypto::PublicKey provider, crypto::Suite suite)
    : keys_(std::move(keys)), provider_(std::move(provider)), suite_(suite) {
  if (!keys_.keypair.valid() || !provider_.valid()) throw std::invalid_argument("enterprise client needs keys");
}

RegistrationRequest EnterpriseClient::build_registration_request() const {
  if (keys_.ep_code.size() < kMinEpCode || keys_.ep_code.size() > kMaxEpCode) {
    throw std::invalid_argument("EP-code must be 8 to 64 bytes");
  }
  const Bytes plaintext = wire::encode_fields({wire::to_bytes(keys_.ep_code), keys_.keypair.public_key().der()});
  return RegistrationRequest{crypto::seal(provider_, plaintext)};
}

const crypto::SymmetricKey& EnterpriseClient::accept_reply(const ReplyMessage& reply) {
  const Nonce nonce = verify_signature_block(provider_, suite_, covered_bytes(reply), reply.signature_block);
  if (seen_.count(nonce)) throw Error(ErrorCode::ReplayedNonce, "reply nonce already seen");
  seen_.insert(nonce);

  if (reply.ack == kDenied) throw Error(ErrorCode::RegistrationDenied, "provider denied the registration");
  if (reply.ack != kRegistered) throw Error(ErrorCode::ProtocolError, "unexpected ack '" + reply.ack + "'");

  Bytes key = crypto::open(keys_.keypair, reply.enc_shared_key);
  if (key.size() != crypto::SymmetricKey{}.size()) {
    throw Error(ErrorCode::DecryptionFailure, "shared key has the wrong length");
  }
  crypto::SymmetricKey k{};
  std::copy(key.begin(), key.end(), k.begin());
  keys_.shared_key = k;
  return *keys_.shared_key;
}

FurtherMessage EnterpriseClient::build_strategy_message(const Strategy& s) {
  const std::string json = to_json(s).dump();
  return build_payload_message(ByteView(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
}

FurtherMessage EnterpriseClient::build_payload_message(ByteView payload) {
  if (!keys_.shared_key) throw Error(ErrorCode::ProtocolError, "not registered");
  FurtherMessage m;
  m.enc_payload = crypto::aead_seal(*keys_.shared_key, payload);
  m.signature_block = make_signature_block(keys_.keypair, suite_, covered_bytes(m));
  return m;
}

AckResult EnterpriseClient::accept_ack(const AckMessage& ack) {
  const Nonce nonce = verify_signature_block(provider_, suite_, covered_bytes(ack), ack.signature_block);
  if (seen_.count(nonce)) throw Error(ErrorCode::ReplayedNonce, "ack nonce already seen");
  seen_.insert(nonce);

  if (ack.in_reply_to.size() != crypto::kNonceSize) throw Error(ErrorCode::ProtocolError, "malformed in_reply_to");

  if (ack.status == kSuccess) return {true, ack.reason};
  if (ack.status == kFailure) return {false, ack.reason};
  throw Error(ErrorCode::ProtocolError, "unexpected ack status '" + ack.status + "'");
}

}  // namespace harmmtd::proto
