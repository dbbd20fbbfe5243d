// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: executes every acceptance criterion at its pinned
// tolerance and prints one pass/fail line per criterion.
#include <iostream>

#include "disoul/testing/selftest.hpp"

int main() {
  disoul::testing::SelftestOptions options;
  options.progress = &std::cout;
  const auto results = disoul::testing::run_acceptance(options);
  return disoul::testing::report_acceptance(std::cout, results);
}
