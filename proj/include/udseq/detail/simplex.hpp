#pragma once

#include <vector>

namespace udseq::detail {

// max c.x  s.t.  A x <= b, x >= 0, with b >= 0 so the slack basis is a
// feasible start. Dense full-tableau simplex, Dantzig pricing with a
// Bland fallback against cycling.
struct SimplexProblem {
  int num_vars = 0;
  std::vector<std::vector<double>> rows;  // coefficients, each of size num_vars
  std::vector<double> rhs;                // nonnegative
  std::vector<double> objective;          // size num_vars
};

struct SimplexSolution {
  bool optimal = false;
  double value = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

SimplexSolution simplex_max(const SimplexProblem& problem);

}  // namespace udseq::detail
