#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Thin RAII layer over OpenSSL 3 EVP.
//
//   asymmetric encryption  RSA-2048 OAEP(SHA-256) wrapping an AES-256-GCM key
//   private-key "encryption" detached RSA-PSS(SHA-256) signature
//   symmetric encryption   AES-256-GCM, random 96-bit IV per message
//   message digest         MD5 (md5-compat suite) or SHA-256 (modern suite)

typedef struct evp_pkey_st EVP_PKEY;

namespace harmmtd::crypto {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using SymmetricKey = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kNonceSize = 16;
inline constexpr std::size_t kIvSize = 12;
inline constexpr std::size_t kTagSize = 16;

enum class Suite : std::uint8_t {
  Md5Compat = 0x01,
  Modern = 0x02,
};

std::optional<Suite> suite_from_byte(std::uint8_t b) noexcept;
/// "md5-compat" or "modern"; throws std::invalid_argument otherwise.
Suite suite_from_name(std::string_view name);
std::string_view to_string(Suite s) noexcept;

std::size_t digest_size(Suite s) noexcept;
Bytes digest(Suite s, ByteView data);

Bytes random_bytes(std::size_t n);
SymmetricKey random_key();

class PublicKey {
 public:
  PublicKey() = default;

  static PublicKey from_der(ByteView der);  // throws ProtocolError
  static PublicKey from_pem(const std::string& pem);

  Bytes der() const;
  std::string pem() const;
  bool valid() const noexcept { return key_ != nullptr; }
  EVP_PKEY* get() const noexcept { return key_.get(); }

  bool operator==(const PublicKey& other) const { return der() == other.der(); }

 private:
  friend class KeyPair;
  explicit PublicKey(std::shared_ptr<EVP_PKEY> k) : key_(std::move(k)) {}
  std::shared_ptr<EVP_PKEY> key_;
};

class KeyPair {
 public:
  KeyPair() = default;

  static KeyPair generate(int bits = 2048);
  static KeyPair from_pem(const std::string& private_pem);

  PublicKey public_key() const;
  std::string private_pem() const;
  bool valid() const noexcept { return key_ != nullptr; }
  EVP_PKEY* get() const noexcept { return key_.get(); }

 private:
  explicit KeyPair(std::shared_ptr<EVP_PKEY> k) : key_(std::move(k)) {}
  std::shared_ptr<EVP_PKEY> key_;
};

/// Hybrid public-key encryption. Layout:
///   u16be wrapped_len | RSA-OAEP(content key) | iv | ciphertext | tag
Bytes seal(const PublicKey& recipient, ByteView plaintext);
/// Throws Error(DecryptionFailure).
Bytes open(const KeyPair& recipient, ByteView sealed);

Bytes sign(const KeyPair& signer, ByteView message);
bool verify(const PublicKey& signer, ByteView message, ByteView signature);

/// iv | ciphertext | tag
Bytes aead_seal(const SymmetricKey& key, ByteView plaintext);
/// Throws Error(DecryptionFailure).
Bytes aead_open(const SymmetricKey& key, ByteView box);

bool constant_time_equal(ByteView a, ByteView b) noexcept;

}  // namespace harmmtd::crypto
