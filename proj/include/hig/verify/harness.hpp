// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace hig::verify {

struct CheckResult {
  std::string id;    // acceptance criterion number, e.g. "4"
  std::string name;  // short slug
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct Outcome {
  bool pass;
  std::string detail;
};

// Runs `body`, timing it; exceptions become failures carrying the message.
CheckResult run_check(std::string id, std::string name, const std::function<Outcome()>& body);

class Report {
 public:
  void add(CheckResult r) { results_.push_back(std::move(r)); }
  void append(const Report& other);
  bool all_passed() const;
  const std::vector<CheckResult>& results() const { return results_; }
  // One `PASS|FAIL [id] name (seconds): detail` line per check.
  void print(std::ostream& os) const;

 private:
  std::vector<CheckResult> results_;
};

std::string format_line(const CheckResult& r);

}  // namespace hig::verify
