#include "noisenet/node/snippet.hpp"

#include <json.hpp>
#include <fmt/format.h>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/gzip.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/common/tar.hpp"
#include "noisenet/node/flac.hpp"

namespace noisenet::node {

namespace {
constexpr const char* kAudioMember = "audio.flac.enc";
constexpr const char* kKeyMember = "key.enc";
constexpr const char* kMetaMember = "meta.json";
}  // namespace

std::string SnippetMeta::to_json() const {
  // Key order is fixed so the text can serve as associated data.
  nlohmann::ordered_json j;
  j["sensor_id"] = sensor_id;
  j["ts_ms"] = to_unix_ms(capture_time);
  j["codec"] = codec;
  j["cipher"] = cipher;
  j["duration_s"] = duration_s;
  return j.dump();
}

SnippetMeta SnippetMeta::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SnippetMeta m;
    m.sensor_id = j.at("sensor_id").get<std::string>();
    m.capture_time = from_unix_ms(j.at("ts_ms").get<std::int64_t>());
    m.codec = j.at("codec").get<std::string>();
    m.cipher = j.at("cipher").get<std::string>();
    m.duration_s = j.at("duration_s").get<int>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("bad snippet meta.json: {}", e.what()));
  }
}

std::vector<std::uint8_t> SnippetContainer::to_bytes() const {
  const auto mtime = to_unix_ms(meta.capture_time) / 1000;
  const auto meta_text = meta.to_json();
  std::vector<tar::Member> members;
  members.push_back({kMetaMember, std::vector<std::uint8_t>(meta_text.begin(), meta_text.end()), mtime});
  members.push_back({kKeyMember, wrapped_key, mtime});
  members.push_back({kAudioMember, payload, mtime});
  // Ciphertext does not compress, so the gzip layer uses stored blocks.
  return gzip::compress(tar::write(members), 0);
}

SnippetContainer SnippetContainer::from_bytes(std::span<const std::uint8_t> bytes) {
  const auto members = tar::read(gzip::decompress(bytes));
  SnippetContainer c;
  bool have_meta = false, have_key = false, have_audio = false;
  for (const auto& m : members) {
    if (m.name == kMetaMember) {
      c.meta = SnippetMeta::from_json(std::string_view(reinterpret_cast<const char*>(m.data.data()), m.data.size()));
      have_meta = true;
    } else if (m.name == kKeyMember) {
      c.wrapped_key = m.data;
      have_key = true;
    } else if (m.name == kAudioMember) {
      c.payload = m.data;
      have_audio = true;
    }
  }
  if (!have_meta || !have_key || !have_audio) throw FormatError("snippet container is missing a member");
  return c;
}

std::string SnippetContainer::file_name() const {
  return fmt::format("{}_{}.tar.gz", meta.sensor_id, to_unix_ms(meta.capture_time));
}

SnippetContainer package_snippet(std::span<const std::int16_t> pcm, const std::string& sensor_id,
                                 Timestamp capture_time, const RsaKey& recipient, const ByteSource& random) {
  if (pcm.size() != kSnippetSamples) {
    throw DomainError(fmt::format("snippet must hold {} samples, got {}", kSnippetSamples, pcm.size()));
  }
  if (sensor_id.empty()) throw DomainError("empty sensor id");
  SnippetContainer c;
  c.meta.sensor_id = sensor_id;
  c.meta.capture_time = capture_time;

  std::vector<std::uint8_t> compressed;
  try {
    compressed = flac::encode(pcm, 48000);
  } catch (const std::exception& e) {
    throw PackagingError(fmt::format("FLAC encode failed: {}", e.what()));
  }

  AesKey key{};
  std::array<std::uint8_t, kGcmNonceBytes> nonce{};
  random(key);
  random(nonce);
  const auto aad = c.meta.to_json();
  try {
    c.payload = aes_gcm_seal(key, nonce, compressed, as_bytes(aad));
    c.wrapped_key = rsa_oaep_wrap(recipient, key);
  } catch (const CryptoError& e) {
    throw PackagingError(e.what());
  }
  return c;
}

std::vector<std::int16_t> unpack_snippet(const SnippetContainer& container, const RsaKey& private_key) {
  if (container.meta.codec != kCodecFlac || container.meta.cipher != kCipherId) {
    throw FormatError("unsupported snippet codec or cipher");
  }
  const auto raw_key = rsa_oaep_unwrap(private_key, container.wrapped_key);
  if (raw_key.size() != kAesKeyBytes) throw AuthenticationFailure("wrapped key has wrong length");
  AesKey key{};
  std::copy(raw_key.begin(), raw_key.end(), key.begin());
  const auto compressed = aes_gcm_open(key, container.payload, as_bytes(container.meta.to_json()));
  auto decoded = flac::decode(compressed);
  if (decoded.sample_rate_hz != 48000) throw FormatError("snippet sample rate is not 48 kHz");
  return std::move(decoded.samples);
}

}  // namespace noisenet::node
