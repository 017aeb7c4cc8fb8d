#pragma once

#include <stdexcept>
#include <string>

namespace viscoflux {

/// Argument outside the mathematical domain of a function (negative density, x <= 0, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Invalid parameters or configuration. `key()` names the offending entry when known.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Non-finite or otherwise corrupted numerical state.
class IntegrityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace viscoflux
