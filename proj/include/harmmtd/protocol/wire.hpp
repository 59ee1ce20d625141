#pragma once

#include <cstdint>
#include <vector>

#include "harmmtd/protocol/crypto.hpp"

// Frame: u32be length | type | suite | payload.
// The length counts every byte after the length field itself.
// Payloads are sequences of u16be length-prefixed fields.

namespace harmmtd::wire {

using crypto::Bytes;
using crypto::ByteView;

enum class MessageType : std::uint8_t {
  RegistrationRequest = 0x01,
  ReplyMessage = 0x02,
  FurtherMessage = 0x03,
  Ack = 0x04,
};

const char* to_string(MessageType t) noexcept;

inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kMaxFrameBody = std::size_t{1} << 20;
inline constexpr std::size_t kMaxField = 0xffff;

struct Frame {
  MessageType type = MessageType::RegistrationRequest;
  crypto::Suite suite = crypto::Suite::Md5Compat;
  Bytes payload;
};

Bytes encode_frame(const Frame& frame);
/// The whole buffer must be exactly one frame. Throws ProtocolError.
Frame decode_frame(ByteView bytes);
/// Body length announced by a 4-byte header. Throws ProtocolError past kMaxFrameBody.
std::size_t frame_body_length(ByteView header);

void append_field(Bytes& out, ByteView field);
Bytes encode_fields(const std::vector<Bytes>& fields);
/// Exactly `count` fields, nothing left over. Throws ProtocolError.
std::vector<Bytes> decode_fields(ByteView payload, std::size_t count);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_text(ByteView b) { return std::string(b.begin(), b.end()); }

}  // namespace harmmtd::wire
