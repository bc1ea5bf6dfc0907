//
// Copyright 2026 The dpstream Authors
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
//

#ifndef DPSTREAM_ERRORS_H_
#define DPSTREAM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dpstream {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes (see ExitCodeFor).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument outside the mathematically valid range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An invalid combination of parameters when wiring an estimator.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation not allowed in the current state (e.g. feeding past the horizon).
class StateError : public Error {
 public:
  using Error::Error;
};

// Element-mode operation applied to an integer stream or vice versa.
class ModeError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Malformed stream file or snapshot. Carries the offending line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0);
  long line() const { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// An enumeration or allocation budget would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitResource = 4;

// Exit code for an error escaping to main().
int ExitCodeFor(const Error& e);

}  // namespace dpstream

#endif  // DPSTREAM_ERRORS_H_
