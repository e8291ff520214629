#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisenet/common/rng.hpp"

struct evp_pkey_st;

namespace noisenet::node {

class AuthenticationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fills a buffer with key material.
using ByteSource = std::function<void(std::span<std::uint8_t>)>;

/// OpenSSL CSPRNG.
ByteSource system_random();
/// Deterministic bytes from a seeded generator (simulation and tests only).
ByteSource seeded_random(Rng& rng);

/// RSA key (public, or private which also carries the public half).
class RsaKey {
 public:
  static RsaKey generate(int bits = 2048);
  static RsaKey from_pem(const std::string& pem);

  std::string public_pem() const;
  std::string private_pem() const;
  RsaKey public_only() const;
  bool has_private() const;
  int bits() const;

  evp_pkey_st* get() const { return key_.get(); }

 private:
  struct Deleter {
    void operator()(evp_pkey_st* k) const;
  };
  explicit RsaKey(evp_pkey_st* k) : key_(k, Deleter{}) {}
  std::shared_ptr<evp_pkey_st> key_;
};

inline constexpr std::size_t kAesKeyBytes = 32;
inline constexpr std::size_t kGcmNonceBytes = 12;
inline constexpr std::size_t kGcmTagBytes = 16;

using AesKey = std::array<std::uint8_t, kAesKeyBytes>;

/// RSA-OAEP (SHA-256, MGF1-SHA-256) key wrap.
std::vector<std::uint8_t> rsa_oaep_wrap(const RsaKey& recipient, std::span<const std::uint8_t> plaintext);
/// Throws AuthenticationFailure if the ciphertext does not unwrap under this key.
std::vector<std::uint8_t> rsa_oaep_unwrap(const RsaKey& private_key, std::span<const std::uint8_t> wrapped);

/// Returns nonce || ciphertext || tag.
std::vector<std::uint8_t> aes_gcm_seal(const AesKey& key, const std::array<std::uint8_t, kGcmNonceBytes>& nonce,
                                       std::span<const std::uint8_t> plaintext, std::span<const std::uint8_t> aad);
/// Inverse of aes_gcm_seal; throws AuthenticationFailure on any tag mismatch.
std::vector<std::uint8_t> aes_gcm_open(const AesKey& key, std::span<const std::uint8_t> sealed,
                                       std::span<const std::uint8_t> aad);

/// RSA-PSS / SHA-256 signatures.
std::vector<std::uint8_t> rsa_sign(const RsaKey& private_key, std::span<const std::uint8_t> message);
bool rsa_verify(const RsaKey& public_key, std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature);

}  // namespace noisenet::node
