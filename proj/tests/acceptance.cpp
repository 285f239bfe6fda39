// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: runs every verification suite and prints one PASS/FAIL
// line per criterion. A criterion passes only if all of its checks pass.
// Optional arguments restrict the run to named suites. The summary is also
// written to acceptance_report.txt in the working directory.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "hig/verify/suites.hpp"

int main(int argc, char** argv) {
  using namespace hig::verify;
  std::vector<std::string> suites = {"mp-ops", "magnitude", "graph-oracle", "gradcheck", "sampler-oracle", "pipeline"};
  if (argc > 1) suites.assign(argv + 1, argv + argc);
  std::remove("acceptance_report.txt");  // never echo a stale report
  const auto cfg = PipelineConfig::desk_scale();

  Report all;
  for (const auto& s : suites) {
    std::cout << "== suite " << s << std::endl;
    const auto r = run_suite(s, cfg, &std::cout);
    r.print(std::cout);
    all.append(r);
  }

  std::map<int, std::pair<bool, double>> by_id;
  for (const auto& c : all.results()) {
    auto [it, fresh] = by_id.try_emplace(std::stoi(c.id), true, 0.0);
    it->second.first = it->second.first && c.pass;
    it->second.second += c.seconds;
  }
  std::ostringstream summary;
  summary << "== acceptance criteria\n";
  bool ok = true;
  for (const auto& [id, v] : by_id) {
    char line[64];
    std::snprintf(line, sizeof line, "%s criterion %2d (%.1fs)\n", v.first ? "PASS" : "FAIL", id, v.second);
    summary << line;
    ok = ok && v.first;
  }
  summary << (ok ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << '\n';
  std::cout << '\n' << summary.str() << std::flush;
  std::ofstream report("acceptance_report.txt");
  all.print(report);
  report << '\n' << summary.str();
  return ok ? 0 : 1;
}
