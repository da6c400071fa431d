#pragma once

#include <stdexcept>
#include <string>

namespace mpmab {

// Invalid experiment or component configuration. `key` names the offending
// config entry when there is one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : std::runtime_error(key.empty() ? message : key + ": " + message),
        message_(message),
        key_(std::move(key)) {}

  const std::string& message() const { return message_; }
  const std::string& key() const { return key_; }

 private:
  std::string message_;
  std::string key_;
};

// Failure reading or writing an experiment file.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& message, std::string path)
      : std::runtime_error(message + ": " + path), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace mpmab
