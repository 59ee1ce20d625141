#include "harmmtd/protocol/crypto.hpp"

#include <stdexcept>

#include <openssl/bio.h>
#include <openssl/crypto.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include "harmmtd/error.hpp"

namespace harmmtd::crypto {

namespace {

struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxFree {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct BioFree {
  void operator()(BIO* p) const { BIO_free(p); }
};

using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;
using Bio = std::unique_ptr<BIO, BioFree>;

std::shared_ptr<EVP_PKEY> own(EVP_PKEY* k) { return std::shared_ptr<EVP_PKEY>(k, EVP_PKEY_free); }

[[noreturn]] void openssl_failure(const char* what) {
  const unsigned long err = ERR_get_error();
  char buf[256] = "unknown";
  if (err != 0) ERR_error_string_n(err, buf, sizeof buf);
  ERR_clear_error();
  throw std::runtime_error(std::string(what) + ": " + buf);
}

[[noreturn]] void decryption_failure(const char* what) {
  ERR_clear_error();
  throw Error(ErrorCode::DecryptionFailure, what);
}

std::string bio_to_string(BIO* bio) {
  char* data = nullptr;
  const long len = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(len));
}

const EVP_MD* md_for(Suite s) { return s == Suite::Md5Compat ? EVP_md5() : EVP_sha256(); }

}  // namespace

std::optional<Suite> suite_from_byte(std::uint8_t b) noexcept {
  switch (b) {
    case static_cast<std::uint8_t>(Suite::Md5Compat): return Suite::Md5Compat;
    case static_cast<std::uint8_t>(Suite::Modern): return Suite::Modern;
    default: return std::nullopt;
  }
}

Suite suite_from_name(std::string_view name) {
  if (name == "md5-compat") return Suite::Md5Compat;
  if (name == "modern") return Suite::Modern;
  throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
}

std::string_view to_string(Suite s) noexcept { return s == Suite::Md5Compat ? "md5-compat" : "modern"; }

std::size_t digest_size(Suite s) noexcept { return s == Suite::Md5Compat ? 16 : 32; }

Bytes digest(Suite s, ByteView data) {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md_for(s), nullptr) != 1) {
    openssl_failure("EVP_Digest");
  }
  out.resize(len);
  return out;
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) openssl_failure("RAND_bytes");
  return out;
}

SymmetricKey random_key() {
  SymmetricKey k{};
  if (RAND_bytes(k.data(), static_cast<int>(k.size())) != 1) openssl_failure("RAND_bytes");
  return k;
}

PublicKey PublicKey::from_der(ByteView der) {
  const unsigned char* p = der.data();
  EVP_PKEY* k = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (k == nullptr || p != der.data() + der.size()) {
    if (k != nullptr) EVP_PKEY_free(k);
    ERR_clear_error();
    throw Error(ErrorCode::ProtocolError, "malformed public key");
  }
  return PublicKey(own(k));
}

PublicKey PublicKey::from_pem(const std::string& pem) {
  Bio bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  EVP_PKEY* k = PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
  if (k == nullptr) openssl_failure("PEM_read_bio_PUBKEY");
  return PublicKey(own(k));
}

Bytes PublicKey::der() const {
  if (!key_) return {};
  const int len = i2d_PUBKEY(key_.get(), nullptr);
  if (len <= 0) openssl_failure("i2d_PUBKEY");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PUBKEY(key_.get(), &p);
  return out;
}

std::string PublicKey::pem() const {
  Bio bio(BIO_new(BIO_s_mem()));
  if (PEM_write_bio_PUBKEY(bio.get(), key_.get()) != 1) openssl_failure("PEM_write_bio_PUBKEY");
  return bio_to_string(bio.get());
}

KeyPair KeyPair::generate(int bits) {
  EVP_PKEY* k = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(bits));
  if (k == nullptr) openssl_failure("EVP_PKEY_Q_keygen");
  return KeyPair(own(k));
}

KeyPair KeyPair::from_pem(const std::string& private_pem) {
  Bio bio(BIO_new_mem_buf(private_pem.data(), static_cast<int>(private_pem.size())));
  EVP_PKEY* k = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
  if (k == nullptr) openssl_failure("PEM_read_bio_PrivateKey");
  return KeyPair(own(k));
}

PublicKey KeyPair::public_key() const {
  // Round-trip through DER so the public handle carries no private material.
  const int len = i2d_PUBKEY(key_.get(), nullptr);
  if (len <= 0) openssl_failure("i2d_PUBKEY");
  Bytes der(static_cast<std::size_t>(len));
  unsigned char* p = der.data();
  i2d_PUBKEY(key_.get(), &p);
  return PublicKey::from_der(der);
}

std::string KeyPair::private_pem() const {
  Bio bio(BIO_new(BIO_s_mem()));
  if (PEM_write_bio_PrivateKey(bio.get(), key_.get(), nullptr, nullptr, 0, nullptr, nullptr) != 1) {
    openssl_failure("PEM_write_bio_PrivateKey");
  }
  return bio_to_string(bio.get());
}

namespace {

PkeyCtx oaep_ctx(EVP_PKEY* key, bool encrypt) {
  PkeyCtx ctx(EVP_PKEY_CTX_new(key, nullptr));
  if (!ctx) openssl_failure("EVP_PKEY_CTX_new");
  const int init = encrypt ? EVP_PKEY_encrypt_init(ctx.get()) : EVP_PKEY_decrypt_init(ctx.get());
  if (init != 1 || EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) != 1 ||
      EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()) != 1) {
    openssl_failure("OAEP setup");
  }
  return ctx;
}

}  // namespace

Bytes seal(const PublicKey& recipient, ByteView plaintext) {
  const SymmetricKey content_key = random_key();
  PkeyCtx ctx = oaep_ctx(recipient.get(), true);
  size_t wrapped_len = 0;
  if (EVP_PKEY_encrypt(ctx.get(), nullptr, &wrapped_len, content_key.data(), content_key.size()) != 1) {
    openssl_failure("EVP_PKEY_encrypt");
  }
  Bytes wrapped(wrapped_len);
  if (EVP_PKEY_encrypt(ctx.get(), wrapped.data(), &wrapped_len, content_key.data(), content_key.size()) != 1) {
    openssl_failure("EVP_PKEY_encrypt");
  }
  wrapped.resize(wrapped_len);

  Bytes out;
  out.push_back(static_cast<std::uint8_t>(wrapped.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(wrapped.size() & 0xff));
  out.insert(out.end(), wrapped.begin(), wrapped.end());
  const Bytes body = aead_seal(content_key, plaintext);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Bytes open(const KeyPair& recipient, ByteView sealed) {
  if (sealed.size() < 2) decryption_failure("sealed box too short");
  const std::size_t wrapped_len = (std::size_t{sealed[0]} << 8) | sealed[1];
  if (sealed.size() < 2 + wrapped_len + kIvSize + kTagSize) decryption_failure("sealed box truncated");

  PkeyCtx ctx = oaep_ctx(recipient.get(), false);
  Bytes content_key(EVP_PKEY_get_size(recipient.get()));
  size_t key_len = content_key.size();
  if (EVP_PKEY_decrypt(ctx.get(), content_key.data(), &key_len, sealed.data() + 2, wrapped_len) != 1 ||
      key_len != SymmetricKey{}.size()) {
    decryption_failure("key unwrap failed");
  }
  SymmetricKey key{};
  std::copy_n(content_key.begin(), key.size(), key.begin());
  OPENSSL_cleanse(content_key.data(), content_key.size());
  return aead_open(key, sealed.subspan(2 + wrapped_len));
}

namespace {

MdCtx pss_ctx(EVP_PKEY* key, bool signing) {
  MdCtx md(EVP_MD_CTX_new());
  if (!md) openssl_failure("EVP_MD_CTX_new");
  EVP_PKEY_CTX* pctx = nullptr;
  const int init = signing ? EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, key)
                           : EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr, key);
  if (init != 1 || EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) != 1 ||
      EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) != 1) {
    openssl_failure("PSS setup");
  }
  return md;
}

}  // namespace

Bytes sign(const KeyPair& signer, ByteView message) {
  MdCtx md = pss_ctx(signer.get(), true);
  size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len, message.data(), message.size()) != 1) {
    openssl_failure("EVP_DigestSign");
  }
  Bytes sig(len);
  if (EVP_DigestSign(md.get(), sig.data(), &len, message.data(), message.size()) != 1) {
    openssl_failure("EVP_DigestSign");
  }
  sig.resize(len);
  return sig;
}

bool verify(const PublicKey& signer, ByteView message, ByteView signature) {
  if (!signer.valid()) return false;
  MdCtx md = pss_ctx(signer.get(), false);
  const int rc = EVP_DigestVerify(md.get(), signature.data(), signature.size(), message.data(), message.size());
  ERR_clear_error();
  return rc == 1;
}

Bytes aead_seal(const SymmetricKey& key, ByteView plaintext) {
  Bytes out = random_bytes(kIvSize);
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), out.data()) != 1) {
    openssl_failure("EVP_EncryptInit_ex");
  }
  out.resize(kIvSize + plaintext.size() + kTagSize);
  int len = 0;
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data() + kIvSize, &len, plaintext.data(), static_cast<int>(plaintext.size())) != 1) {
    openssl_failure("EVP_EncryptUpdate");
  }
  int tail = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kIvSize + len, &tail) != 1) openssl_failure("EVP_EncryptFinal_ex");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                          out.data() + kIvSize + plaintext.size()) != 1) {
    openssl_failure("GCM tag");
  }
  return out;
}

Bytes aead_open(const SymmetricKey& key, ByteView box) {
  if (box.size() < kIvSize + kTagSize) decryption_failure("ciphertext too short");
  const std::size_t body = box.size() - kIvSize - kTagSize;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), box.data()) != 1) {
    openssl_failure("EVP_DecryptInit_ex");
  }
  Bytes out(body);
  int len = 0;
  if (body > 0 &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, box.data() + kIvSize, static_cast<int>(body)) != 1) {
    decryption_failure("decrypt failed");
  }
  Bytes tag(box.end() - static_cast<std::ptrdiff_t>(kTagSize), box.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize), tag.data()) != 1) {
    openssl_failure("GCM tag");
  }
  int tail = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) decryption_failure("authentication tag mismatch");
  return out;
}

bool constant_time_equal(ByteView a, ByteView b) noexcept {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace harmmtd::crypto
