#include "noisenet/node/crypto.hpp"

#include <openssl/bio.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::node {

namespace {

[[noreturn]] void fail(const char* what) {
  const unsigned long code = ERR_get_error();
  char buf[256] = {0};
  if (code != 0) ERR_error_string_n(code, buf, sizeof buf);
  ERR_clear_error();
  throw CryptoError(code != 0 ? fmt::format("{}: {}", what, buf) : std::string(what));
}

struct CtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
  void operator()(BIO* b) const { BIO_free(b); }
};
template <class T>
using Owned = std::unique_ptr<T, CtxFree>;

std::string bio_string(BIO* bio) {
  char* data = nullptr;
  const long n = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(n));
}

Owned<EVP_PKEY_CTX> oaep_ctx(const RsaKey& key, bool encrypt) {
  Owned<EVP_PKEY_CTX> ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
  if (!ctx) fail("EVP_PKEY_CTX_new");
  if ((encrypt ? EVP_PKEY_encrypt_init(ctx.get()) : EVP_PKEY_decrypt_init(ctx.get())) <= 0) fail("OAEP init");
  if (EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) <= 0 ||
      EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()) <= 0) {
    fail("OAEP parameters");
  }
  return ctx;
}

}  // namespace

ByteSource system_random() {
  return [](std::span<std::uint8_t> out) {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) fail("RAND_bytes");
  };
}

ByteSource seeded_random(Rng& rng) {
  return [&rng](std::span<std::uint8_t> out) {
    for (auto& b : out) b = static_cast<std::uint8_t>(rng() >> 56);
  };
}

void RsaKey::Deleter::operator()(evp_pkey_st* k) const { EVP_PKEY_free(k); }

RsaKey RsaKey::generate(int bits) {
  if (bits < 1024) throw DomainError("RSA key must be at least 1024 bits");
  EVP_PKEY* key = EVP_RSA_gen(static_cast<unsigned>(bits));
  if (key == nullptr) fail("EVP_RSA_gen");
  return RsaKey(key);
}

RsaKey RsaKey::from_pem(const std::string& pem) {
  Owned<BIO> bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  EVP_PKEY* key = nullptr;
  if (pem.find("PRIVATE KEY") != std::string::npos) {
    key = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
  } else {
    key = PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
  }
  if (key == nullptr) {
    ERR_clear_error();
    throw FormatError("unreadable PEM key");
  }
  if (EVP_PKEY_base_id(key) != EVP_PKEY_RSA) {
    EVP_PKEY_free(key);
    throw FormatError("PEM key is not RSA");
  }
  return RsaKey(key);
}

std::string RsaKey::public_pem() const {
  Owned<BIO> bio(BIO_new(BIO_s_mem()));
  if (PEM_write_bio_PUBKEY(bio.get(), get()) != 1) fail("PEM_write_bio_PUBKEY");
  return bio_string(bio.get());
}

std::string RsaKey::private_pem() const {
  if (!has_private()) throw DomainError("key has no private half");
  Owned<BIO> bio(BIO_new(BIO_s_mem()));
  if (PEM_write_bio_PrivateKey(bio.get(), get(), nullptr, nullptr, 0, nullptr, nullptr) != 1) {
    fail("PEM_write_bio_PrivateKey");
  }
  return bio_string(bio.get());
}

RsaKey RsaKey::public_only() const { return from_pem(public_pem()); }

bool RsaKey::has_private() const {
  BIGNUM* d = nullptr;
  const bool ok = EVP_PKEY_get_bn_param(get(), "d", &d) == 1 && d != nullptr;
  BN_free(d);
  ERR_clear_error();
  return ok;
}

int RsaKey::bits() const { return EVP_PKEY_get_bits(get()); }

std::vector<std::uint8_t> rsa_oaep_wrap(const RsaKey& recipient, std::span<const std::uint8_t> plaintext) {
  auto ctx = oaep_ctx(recipient, true);
  std::size_t len = 0;
  if (EVP_PKEY_encrypt(ctx.get(), nullptr, &len, plaintext.data(), plaintext.size()) <= 0) fail("OAEP size");
  std::vector<std::uint8_t> out(len);
  if (EVP_PKEY_encrypt(ctx.get(), out.data(), &len, plaintext.data(), plaintext.size()) <= 0) fail("OAEP encrypt");
  out.resize(len);
  return out;
}

std::vector<std::uint8_t> rsa_oaep_unwrap(const RsaKey& private_key, std::span<const std::uint8_t> wrapped) {
  if (!private_key.has_private()) throw DomainError("unwrap needs a private key");
  auto ctx = oaep_ctx(private_key, false);
  std::size_t len = 0;
  if (EVP_PKEY_decrypt(ctx.get(), nullptr, &len, wrapped.data(), wrapped.size()) <= 0) {
    ERR_clear_error();
    throw AuthenticationFailure("wrapped key rejected");
  }
  std::vector<std::uint8_t> out(len);
  if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, wrapped.data(), wrapped.size()) <= 0) {
    ERR_clear_error();
    throw AuthenticationFailure("wrapped key rejected");
  }
  out.resize(len);
  return out;
}

std::vector<std::uint8_t> aes_gcm_seal(const AesKey& key, const std::array<std::uint8_t, kGcmNonceBytes>& nonce,
                                       std::span<const std::uint8_t> plaintext, std::span<const std::uint8_t> aad) {
  Owned<EVP_CIPHER_CTX> ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1) {
    fail("GCM init");
  }
  std::vector<std::uint8_t> out(kGcmNonceBytes + plaintext.size() + kGcmTagBytes);
  std::copy(nonce.begin(), nonce.end(), out.begin());
  int len = 0;
  if (!aad.empty() && EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("GCM aad");
  }
  if (EVP_EncryptUpdate(ctx.get(), out.data() + kGcmNonceBytes, &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    fail("GCM encrypt");
  }
  int tail = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kGcmNonceBytes + len, &tail) != 1) fail("GCM final");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagBytes,
                          out.data() + kGcmNonceBytes + plaintext.size()) != 1) {
    fail("GCM tag");
  }
  return out;
}

std::vector<std::uint8_t> aes_gcm_open(const AesKey& key, std::span<const std::uint8_t> sealed,
                                       std::span<const std::uint8_t> aad) {
  if (sealed.size() < kGcmNonceBytes + kGcmTagBytes) throw AuthenticationFailure("sealed payload too short");
  const std::size_t ct_len = sealed.size() - kGcmNonceBytes - kGcmTagBytes;
  Owned<EVP_CIPHER_CTX> ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), sealed.data()) != 1) {
    fail("GCM init");
  }
  int len = 0;
  if (!aad.empty() && EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("GCM aad");
  }
  std::vector<std::uint8_t> out(ct_len);
  if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data() + kGcmNonceBytes, static_cast<int>(ct_len)) != 1) {
    fail("GCM decrypt");
  }
  std::array<std::uint8_t, kGcmTagBytes> tag{};
  std::copy(sealed.end() - kGcmTagBytes, sealed.end(), tag.begin());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagBytes, tag.data()) != 1) fail("GCM tag");
  int tail = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) {
    ERR_clear_error();
    throw AuthenticationFailure("payload failed authentication");
  }
  return out;
}

std::vector<std::uint8_t> rsa_sign(const RsaKey& private_key, std::span<const std::uint8_t> message) {
  if (!private_key.has_private()) throw DomainError("signing needs a private key");
  Owned<EVP_MD_CTX> md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, private_key.get()) != 1 ||
      EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) <= 0 ||
      EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) <= 0) {
    fail("PSS init");
  }
  std::size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len, message.data(), message.size()) != 1) fail("PSS size");
  std::vector<std::uint8_t> sig(len);
  if (EVP_DigestSign(md.get(), sig.data(), &len, message.data(), message.size()) != 1) fail("PSS sign");
  sig.resize(len);
  return sig;
}

bool rsa_verify(const RsaKey& public_key, std::span<const std::uint8_t> message,
                std::span<const std::uint8_t> signature) {
  Owned<EVP_MD_CTX> md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr, public_key.get()) != 1 ||
      EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) <= 0 ||
      EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, RSA_PSS_SALTLEN_DIGEST) <= 0) {
    fail("PSS init");
  }
  const int rc = EVP_DigestVerify(md.get(), signature.data(), signature.size(), message.data(), message.size());
  ERR_clear_error();
  return rc == 1;
}

}  // namespace noisenet::node
