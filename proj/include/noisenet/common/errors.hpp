#pragma once

#include <stdexcept>
#include <string>

namespace noisenet {

/// Precondition violated by an argument value (bad frequency, wrong duration, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Scenario or rule configuration rejected; the message starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field_path, const std::string& what)
      : std::runtime_error(field_path + ": " + what), field_path_(std::move(field_path)) {}

  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace noisenet
