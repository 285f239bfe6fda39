// SPDX-License-Identifier: Apache-2.0
#include "hig/verify/harness.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <ostream>

namespace hig::verify {

CheckResult run_check(std::string id, std::string name, const std::function<Outcome()>& body) {
  CheckResult r;
  r.id = std::move(id);
  r.name = std::move(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto o = body();
    r.pass = o.pass;
    r.detail = std::move(o.detail);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void Report::append(const Report& other) {
  results_.insert(results_.end(), other.results_.begin(), other.results_.end());
}

bool Report::all_passed() const {
  for (const auto& r : results_)
    if (!r.pass) return false;
  return !results_.empty();
}

std::string format_line(const CheckResult& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.2fs", r.seconds);
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + r.id + "] " + r.name + " (" + t + "): " + r.detail;
}

void Report::print(std::ostream& os) const {
  for (const auto& r : results_) os << format_line(r) << '\n';
}

}  // namespace hig::verify
