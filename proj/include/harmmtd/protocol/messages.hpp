#pragma once

#include <array>
#include <string>

#include "harmmtd/protocol/crypto.hpp"
#include "harmmtd/protocol/wire.hpp"

namespace harmmtd::proto {

using crypto::Bytes;
using crypto::ByteView;
using Nonce = std::array<std::uint8_t, crypto::kNonceSize>;

inline constexpr const char* kRegistered = "REGISTERED";
inline constexpr const char* kDenied = "DENIED";
inline constexpr const char* kSuccess = "SUCCESS";
inline constexpr const char* kFailure = "FAILURE";

inline constexpr std::size_t kMinEpCode = 8;
inline constexpr std::size_t kMaxEpCode = 64;

// fields: sealed(lenprefix(ep_code) | lenprefix(enterprise public key, DER))
struct RegistrationRequest {
  Bytes ciphertext;
};

// fields: enc_shared_key | ack | signature_block
struct ReplyMessage {
  Bytes enc_shared_key;
  std::string ack;
  Bytes signature_block;
};

// fields: enc_payload | signature_block
struct FurtherMessage {
  Bytes enc_payload;
  Bytes signature_block;
};

// fields: status | reason | in_reply_to | signature_block
struct AckMessage {
  std::string status;
  std::string reason;
  Bytes in_reply_to;
  Bytes signature_block;
};

wire::Frame to_frame(const RegistrationRequest& m, crypto::Suite suite);
wire::Frame to_frame(const ReplyMessage& m, crypto::Suite suite);
wire::Frame to_frame(const FurtherMessage& m, crypto::Suite suite);
wire::Frame to_frame(const AckMessage& m, crypto::Suite suite);

// Each checks the frame type and field layout; throws ProtocolError.
RegistrationRequest registration_from_frame(const wire::Frame& f);
ReplyMessage reply_from_frame(const wire::Frame& f);
FurtherMessage further_from_frame(const wire::Frame& f);
AckMessage ack_from_frame(const wire::Frame& f);

/// Bytes covered by the signature block: the preceding fields, length-prefixed.
Bytes covered_bytes(const ReplyMessage& m);
Bytes covered_bytes(const FurtherMessage& m);
Bytes covered_bytes(const AckMessage& m);

// signature_block = nonce(16) | digest | signature over (nonce | digest)
struct SignatureBlock {
  Nonce nonce{};
  Bytes digest;
  Bytes signature;
};

Bytes make_signature_block(const crypto::KeyPair& signer, crypto::Suite suite, ByteView covered);
/// Throws ProtocolError when the block is too short for the suite.
SignatureBlock parse_signature_block(crypto::Suite suite, ByteView block);
bool signature_matches(const crypto::PublicKey& signer, const SignatureBlock& block);
bool digest_matches(crypto::Suite suite, const SignatureBlock& block, ByteView covered);

/// Signature first, then digest. Returns the nonce; throws SignatureInvalid or DigestMismatch.
Nonce verify_signature_block(const crypto::PublicKey& signer, crypto::Suite suite, ByteView covered,
                             ByteView block);

std::string nonce_hex(const Nonce& n);

}  // namespace harmmtd::proto
