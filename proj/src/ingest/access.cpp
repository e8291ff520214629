#include "noisenet/ingest/access.hpp"

#include <charconv>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/hash.hpp"
#include "noisenet/common/io.hpp"

namespace noisenet::ingest {

namespace {

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw FormatError("odd-length hex string");
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, v, 16);
    if (ec != std::errc() || p != hex.data() + 2 * i + 2) throw FormatError("bad hex digit");
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

}  // namespace

std::string AccessCertificate::signed_text() const {
  return fmt::format("noisenet-access-v1\n{}\n{}", subject, to_unix_ms(expiry));
}

std::string AccessCertificate::to_json() const {
  nlohmann::ordered_json j;
  j["subject"] = subject;
  j["expiry_ms"] = to_unix_ms(expiry);
  j["signature"] = to_hex(signature);
  return j.dump();
}

AccessCertificate AccessCertificate::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AccessCertificate c;
    c.subject = j.at("subject").get<std::string>();
    c.expiry = from_unix_ms(j.at("expiry_ms").get<std::int64_t>());
    c.signature = from_hex(j.at("signature").get<std::string>());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("bad certificate: {}", e.what()));
  }
}

AccessCertificate issue_certificate(const node::RsaKey& authority_private, const std::string& subject,
                                    Timestamp expiry) {
  AccessCertificate c{subject, expiry, {}};
  c.signature = node::rsa_sign(authority_private, as_bytes(c.signed_text()));
  return c;
}

bool certificate_valid(const AccessCertificate& cert, const node::RsaKey& authority_public, Timestamp now) {
  if (!(now < cert.expiry)) return false;
  return node::rsa_verify(authority_public, as_bytes(cert.signed_text()), cert.signature);
}

DecryptionServer::DecryptionServer(node::RsaKey authority_public, node::RsaKey snippet_private)
    : authority_public_(std::move(authority_public)), snippet_private_(std::move(snippet_private)) {
  if (!snippet_private_.has_private()) throw DomainError("decryption server needs the snippet private key");
}

std::vector<std::int16_t> DecryptionServer::decrypt(const node::SnippetContainer& container,
                                                    const AccessCertificate& cert, Timestamp now) const {
  if (!certificate_valid(cert, authority_public_, now)) {
    throw AccessDenied(fmt::format("certificate for '{}' is invalid or expired", cert.subject));
  }
  return node::unpack_snippet(container, snippet_private_);
}

}  // namespace noisenet::ingest
