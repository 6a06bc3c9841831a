// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <iostream>

#include "heartlab/acceptance.hpp"

int main() {
  const bool all = heartlab::acceptance::run_all(std::cout);
  std::cout << (all ? "all criteria pass" : "some criteria fail") << std::endl;
  return all ? 0 : 1;
}
