#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "noisenet/common/time.hpp"
#include "noisenet/node/crypto.hpp"

namespace noisenet::node {

inline constexpr int kSnippetSeconds = 10;
inline constexpr std::size_t kSnippetSamples = 48000 * kSnippetSeconds;

inline constexpr const char* kCodecFlac = "flac";
inline constexpr const char* kCipherId = "aes-256-gcm+rsa-2048-oaep-sha256";

struct SnippetMeta {
  std::string sensor_id;
  Timestamp capture_time{};
  std::string codec = kCodecFlac;
  std::string cipher = kCipherId;
  int duration_s = kSnippetSeconds;

  /// Canonical meta.json text; also the GCM associated data.
  std::string to_json() const;
  static SnippetMeta from_json(std::string_view text);
};

/// Encrypted, compressed 10 s snippet. On the wire it is a gzipped tar with
/// members audio.flac.enc (nonce || ciphertext || tag), key.enc (RSA-OAEP
/// wrapped AES key) and meta.json.
struct SnippetContainer {
  SnippetMeta meta;
  std::vector<std::uint8_t> payload;
  std::vector<std::uint8_t> wrapped_key;

  std::vector<std::uint8_t> to_bytes() const;
  static SnippetContainer from_bytes(std::span<const std::uint8_t> bytes);
  /// "<sensor_id>_<ts_ms>.tar.gz"
  std::string file_name() const;
};

class PackagingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compresses (FLAC) then encrypts a 10 s, 48 kHz snippet with a fresh AES-256
/// key and nonce drawn from `random`, wrapping the key for `recipient`.
/// Throws DomainError unless pcm holds exactly 480000 samples.
SnippetContainer package_snippet(std::span<const std::int16_t> pcm, const std::string& sensor_id,
                                 Timestamp capture_time, const RsaKey& recipient, const ByteSource& random);

/// Unwraps, authenticates, decrypts and decompresses. Throws AuthenticationFailure
/// when the key or payload do not authenticate.
std::vector<std::int16_t> unpack_snippet(const SnippetContainer& container, const RsaKey& private_key);

}  // namespace noisenet::node
