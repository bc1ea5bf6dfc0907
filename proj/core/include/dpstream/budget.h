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

#ifndef DPSTREAM_BUDGET_H_
#define DPSTREAM_BUDGET_H_

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace dpstream {

// How a top-level (epsilon, xi) budget is split across composed
// sub-mechanisms. Charges are checked against the totals with a relative
// tolerance of 1e-9 to absorb floating-point splitting.
class MechanismBudget {
 public:
  struct Entry {
    std::string name;
    double epsilon;
    double xi;
  };

  MechanismBudget(double total_epsilon, double total_xi);

  // Records one sub-mechanism. Throws ConfigError on a duplicate name, a
  // negative share, or a charge that would exceed either total.
  void Charge(const std::string& name, double epsilon, double xi);
  // Records `count` sub-mechanisms "<prefix>[i]" with identical shares.
  void ChargeEach(const std::string& prefix, int64_t count, double epsilon,
                  double xi);

  double total_epsilon() const { return total_epsilon_; }
  double total_xi() const { return total_xi_; }
  double spent_epsilon() const { return spent_epsilon_; }
  double spent_xi() const { return spent_xi_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // True when the charged epsilon equals the total up to the tolerance.
  bool EpsilonExhausted() const;

  // One "name,epsilon,xi" line per entry.
  std::string ToCsv() const;

  // Basic composition of s mechanisms that are each epsilon-DP.
  static double Compose(int64_t s, double epsilon) {
    return static_cast<double>(s) * epsilon;
  }

 private:
  double total_epsilon_;
  double total_xi_;
  double spent_epsilon_ = 0.0;
  double spent_xi_ = 0.0;
  std::vector<Entry> entries_;
  std::unordered_set<std::string> names_;
};

}  // namespace dpstream

#endif  // DPSTREAM_BUDGET_H_
