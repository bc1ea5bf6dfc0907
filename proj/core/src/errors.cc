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

#include "dpstream/errors.h"

namespace dpstream {

namespace {

std::string WithLine(const std::string& what, long line) {
  if (line <= 0) return what;
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

ParseError::ParseError(const std::string& what, long line)
    : Error(WithLine(what, line)), line_(line) {}

int ExitCodeFor(const Error& e) {
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const ParseError*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const ResourceError*>(&e) != nullptr) return kExitResource;
  return kExitConfig;
}

}  // namespace dpstream
