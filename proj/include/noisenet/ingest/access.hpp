#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "noisenet/common/time.hpp"
#include "noisenet/node/crypto.hpp"
#include "noisenet/node/snippet.hpp"

namespace noisenet::ingest {

class AccessDenied : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AccessCertificate {
  std::string subject;
  Timestamp expiry{};
  std::vector<std::uint8_t> signature;

  /// Bytes covered by the signature.
  std::string signed_text() const;
  std::string to_json() const;
  static AccessCertificate from_json(std::string_view text);
};

AccessCertificate issue_certificate(const node::RsaKey& authority_private, const std::string& subject,
                                    Timestamp expiry);
/// Valid iff the signature verifies under the authority key and now < expiry.
bool certificate_valid(const AccessCertificate& cert, const node::RsaKey& authority_public, Timestamp now);

/// Holds the snippet private key and releases audio only to certificate holders.
class DecryptionServer {
 public:
  DecryptionServer(node::RsaKey authority_public, node::RsaKey snippet_private);

  /// Throws AccessDenied for an invalid or expired certificate (before any
  /// key is touched) and AuthenticationFailure for a tampered container.
  std::vector<std::int16_t> decrypt(const node::SnippetContainer& container, const AccessCertificate& cert,
                                    Timestamp now) const;

 private:
  node::RsaKey authority_public_;
  node::RsaKey snippet_private_;
};

}  // namespace noisenet::ingest
