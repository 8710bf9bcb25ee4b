#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "keyreader/gradcheck.hpp"

namespace krd::gradcheck {

struct SuiteEntry {
  std::string name;
  Report report;
};

// Finite-difference checks over the composite op set, every layer, the DOM
// and reader losses and the end-to-end loss, all on small fixed instances.
// Prints one line per check; returns the reports.
std::vector<SuiteEntry> run_suite(std::ostream& out, Scalar tolerance = 1e-4);

bool suite_passed(const std::vector<SuiteEntry>& entries, Scalar tolerance = 1e-4);

}  // namespace krd::gradcheck
