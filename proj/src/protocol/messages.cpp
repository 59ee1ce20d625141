#include "harmmtd/protocol/messages.hpp"

#include <algorithm>

#include "harmmtd/error.hpp"

namespace harmmtd::proto {

using wire::Frame;
using wire::MessageType;

namespace {

void expect_type(const Frame& f, MessageType t) {
  if (f.type != t) {
    throw Error(ErrorCode::ProtocolError,
                std::string("expected ") + wire::to_string(t) + ", got " + wire::to_string(f.type));
  }
}

Frame frame_of(MessageType t, crypto::Suite suite, const std::vector<Bytes>& fields) {
  return Frame{t, suite, wire::encode_fields(fields)};
}

}  // namespace

Frame to_frame(const RegistrationRequest& m, crypto::Suite suite) {
  return frame_of(MessageType::RegistrationRequest, suite, {m.ciphertext});
}

Frame to_frame(const ReplyMessage& m, crypto::Suite suite) {
  return frame_of(MessageType::ReplyMessage, suite, {m.enc_shared_key, wire::to_bytes(m.ack), m.signature_block});
}

Frame to_frame(const FurtherMessage& m, crypto::Suite suite) {
  return frame_of(MessageType::FurtherMessage, suite, {m.enc_payload, m.signature_block});
}

Frame to_frame(const AckMessage& m, crypto::Suite suite) {
  return frame_of(MessageType::Ack, suite,
                  {wire::to_bytes(m.status), wire::to_bytes(m.reason), m.in_reply_to, m.signature_block});
}

RegistrationRequest registration_from_frame(const Frame& f) {
  expect_type(f, MessageType::RegistrationRequest);
  auto fields = wire::decode_fields(f.payload, 1);
  return RegistrationRequest{std::move(fields[0])};
}

ReplyMessage reply_from_frame(const Frame& f) {
  expect_type(f, MessageType::ReplyMessage);
  auto fields = wire::decode_fields(f.payload, 3);
  return ReplyMessage{std::move(fields[0]), wire::to_text(fields[1]), std::move(fields[2])};
}

FurtherMessage further_from_frame(const Frame& f) {
  expect_type(f, MessageType::FurtherMessage);
  auto fields = wire::decode_fields(f.payload, 2);
  return FurtherMessage{std::move(fields[0]), std::move(fields[1])};
}

AckMessage ack_from_frame(const Frame& f) {
  expect_type(f, MessageType::Ack);
  auto fields = wire::decode_fields(f.payload, 4);
  return AckMessage{wire::to_text(fields[0]), wire::to_text(fields[1]), std::move(fields[2]), std::move(fields[3])};
}

Bytes covered_bytes(const ReplyMessage& m) {
  return wire::encode_fields({m.enc_shared_key, wire::to_bytes(m.ack)});
}

Bytes covered_bytes(const FurtherMessage& m) { return wire::encode_fields({m.enc_payload}); }

Bytes covered_bytes(const AckMessage& m) {
  return wire::encode_fields({wire::to_bytes(m.status), wire::to_bytes(m.reason), m.in_reply_to});
}

Bytes make_signature_block(const crypto::KeyPair& signer, crypto::Suite suite, ByteView covered) {
  Bytes block = crypto::random_bytes(crypto::kNonceSize);
  const Bytes d = crypto::digest(suite, covered);
  block.insert(block.end(), d.begin(), d.end());
  const Bytes sig = crypto::sign(signer, block);
  block.insert(block.end(), sig.begin(), sig.end());
  return block;
}

SignatureBlock parse_signature_block(crypto::Suite suite, ByteView block) {
  const std::size_t dlen = crypto::digest_size(suite);
  if (block.size() <= crypto::kNonceSize + dlen) {
    throw Error(ErrorCode::ProtocolError, "signature block too short");
  }
  SignatureBlock out;
  std::copy_n(block.begin(), crypto::kNonceSize, out.nonce.begin());
  out.digest.assign(block.begin() + crypto::kNonceSize, block.begin() + static_cast<std::ptrdiff_t>(crypto::kNonceSize + dlen));
  out.signature.assign(block.begin() + static_cast<std::ptrdiff_t>(crypto::kNonceSize + dlen), block.end());
  return out;
}

bool signature_matches(const crypto::PublicKey& signer, const SignatureBlock& block) {
  Bytes signed_part(block.nonce.begin(), block.nonce.end());
  signed_part.insert(signed_part.end(), block.digest.begin(), block.digest.end());
  return crypto::verify(signer, signed_part, block.signature);
}

bool digest_matches(crypto::Suite suite, const SignatureBlock& block, ByteView covered) {
  return crypto::constant_time_equal(crypto::digest(suite, covered), block.digest);
}

Nonce verify_signature_block(const crypto::PublicKey& signer, crypto::Suite suite, ByteView covered,
                             ByteView block) {
  const SignatureBlock parsed = parse_signature_block(suite, block);
  if (!signature_matches(signer, parsed)) throw Error(ErrorCode::SignatureInvalid, "signature does not verify");
  if (!digest_matches(suite, parsed, covered)) throw Error(ErrorCode::DigestMismatch, "message digest mismatch");
  return parsed.nonce;
}

std::string nonce_hex(const Nonce& n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (auto b : n) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

}  // namespace harmmtd::proto
