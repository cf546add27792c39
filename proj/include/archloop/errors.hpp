// Copyright 2026 The Archloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ARCHLOOP_ERRORS_HPP
#define ARCHLOOP_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace archloop {

// Root of every error thrown by the library. `code()` is a stable,
// machine-readable identifier used in JSON error bodies and CLI output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class IoError : public Error {
 public:
  IoError(const std::string& message, bool not_found = false)
      : Error(not_found ? "NotFound" : "IoError", message),
        not_found_(not_found) {}
  bool not_found() const noexcept { return not_found_; }

 private:
  bool not_found_;
};

class PathEscapeError : public Error {
 public:
  explicit PathEscapeError(const std::string& path)
      : Error("PathEscape", "path escapes workspace: '" + path + "'"),
        path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("ConfigError", message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error("ValidationError", message) {}
};

}  // namespace archloop

#endif  // ARCHLOOP_ERRORS_HPP
