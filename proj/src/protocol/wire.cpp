#include "harmmtd/protocol/wire.hpp"

#include <string>

#include "harmmtd/error.hpp"

namespace harmmtd::wire {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::ProtocolError, what); }

bool known_type(std::uint8_t b) { return b >= 0x01 && b <= 0x04; }

}  // namespace

const char* to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::RegistrationRequest: return "RegistrationRequest";
    case MessageType::ReplyMessage: return "ReplyMessage";
    case MessageType::FurtherMessage: return "FurtherMessage";
    case MessageType::Ack: return "Ack";
  }
  return "?";
}

Bytes encode_frame(const Frame& frame) {
  const std::size_t body = 2 + frame.payload.size();
  if (body > kMaxFrameBody) malformed("frame too large");
  Bytes out;
  out.reserve(kHeaderSize + body);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(body >> shift));
  out.push_back(static_cast<std::uint8_t>(frame.type));
  out.push_back(static_cast<std::uint8_t>(frame.suite));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

std::size_t frame_body_length(ByteView header) {
  if (header.size() < kHeaderSize) malformed("truncated frame header");
  std::size_t len = 0;
  for (std::size_t i = 0; i < kHeaderSize; ++i) len = (len << 8) | header[i];
  if (len < 2) malformed("frame body shorter than its type and suite bytes");
  if (len > kMaxFrameBody) malformed("frame of " + std::to_string(len) + " bytes exceeds the limit");
  return len;
}

Frame decode_frame(ByteView bytes) {
  const std::size_t len = frame_body_length(bytes);
  if (bytes.size() - kHeaderSize != len) malformed("frame length does not match its contents");
  const std::uint8_t type = bytes[4];
  if (!known_type(type)) malformed("unknown message type " + std::to_string(type));
  const auto suite = crypto::suite_from_byte(bytes[5]);
  if (!suite) malformed("unknown suite " + std::to_string(bytes[5]));
  Frame f;
  f.type = static_cast<MessageType>(type);
  f.suite = *suite;
  f.payload.assign(bytes.begin() + 6, bytes.end());
  return f;
}

void append_field(Bytes& out, ByteView field) {
  if (field.size() > kMaxField) malformed("field too long");
  out.push_back(static_cast<std::uint8_t>(field.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(field.size() & 0xff));
  out.insert(out.end(), field.begin(), field.end());
}

Bytes encode_fields(const std::vector<Bytes>& fields) {
  Bytes out;
  for (const auto& f : fields) append_field(out, f);
  return out;
}

std::vector<Bytes> decode_fields(ByteView payload, std::size_t count) {
  std::vector<Bytes> fields;
  fields.reserve(count);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (payload.size() - pos < 2) malformed("truncated field length");
    const std::size_t len = (std::size_t{payload[pos]} << 8) | payload[pos + 1];
    pos += 2;
    if (payload.size() - pos < len) malformed("truncated field");
    fields.emplace_back(payload.begin() + static_cast<std::ptrdiff_t>(pos),
                        payload.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  if (pos != payload.size()) malformed("trailing bytes after the last field");
  return fields;
}

}  // namespace harmmtd::wire
