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

#include "dpstream/budget.h"

#include <cmath>
#include <sstream>

#include "dpstream/errors.h"

namespace dpstream {

namespace {

constexpr double kTolerance = 1e-9;

bool Within(double spent, double total) {
  return spent <= total * (1.0 + kTolerance) + 1e-300;
}

}  // namespace

MechanismBudget::MechanismBudget(double total_epsilon, double total_xi)
    : total_epsilon_(total_epsilon), total_xi_(total_xi) {
  if (!(total_epsilon > 0.0) || !std::isfinite(total_epsilon)) {
    throw ConfigError("total epsilon must be positive and finite");
  }
  if (!(total_xi >= 0.0 && total_xi < 1.0)) {
    throw ConfigError("total xi must lie in [0, 1)");
  }
}

void MechanismBudget::Charge(const std::string& name, double epsilon,
                             double xi) {
  if (!(epsilon >= 0.0) || !(xi >= 0.0)) {
    throw ConfigError("negative budget share for '" + name + "'");
  }
  if (names_.count(name) != 0) {
    throw ConfigError("sub-mechanism '" + name + "' charged twice");
  }
  if (!Within(spent_epsilon_ + epsilon, total_epsilon_)) {
    throw ConfigError("epsilon budget exceeded by '" + name + "'");
  }
  if (!Within(spent_xi_ + xi, total_xi_)) {
    throw ConfigError("xi budget exceeded by '" + name + "'");
  }
  spent_epsilon_ += epsilon;
  spent_xi_ += xi;
  entries_.push_back({name, epsilon, xi});
  names_.insert(name);
}

void MechanismBudget::ChargeEach(const std::string& prefix, int64_t count,
                                 double epsilon, double xi) {
  for (int64_t i = 0; i < count; ++i) {
    Charge(prefix + "[" + std::to_string(i) + "]", epsilon, xi);
  }
}

bool MechanismBudget::EpsilonExhausted() const {
  return std::fabs(spent_epsilon_ - total_epsilon_) <=
         kTolerance * total_epsilon_;
}

std::string MechanismBudget::ToCsv() const {
  std::ostringstream out;
  out.precision(17);
  out << "name,epsilon,xi\n";
  for (const Entry& e : entries_) {
    out << e.name << ',' << e.epsilon << ',' << e.xi << '\n';
  }
  return out.str();
}

}  // namespace dpstream
