#include "udseq/detail/simplex.hpp"

#include <cmath>
#include <limits>

#include "udseq/errors.hpp"

namespace udseq::detail {

namespace {
constexpr double kPivotTol = 1e-11;
constexpr double kZeroTol = 1e-12;
}

SimplexSolution simplex_max(const SimplexProblem& problem) {
  const int n = problem.num_vars;
  const int m = static_cast<int>(problem.rows.size());
  if (static_cast<int>(problem.rhs.size()) != m ||
      static_cast<int>(problem.objective.size()) != n)
    throw ShapeError("simplex problem dimensions disagree");

  const int cols = n + m + 1;  // structural + slacks + rhs
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols, 0.0));
  for (int i = 0; i < m; ++i) {
    if (problem.rhs[i] < 0.0) throw ShapeError("simplex rhs must be nonnegative");
    for (int j = 0; j < n; ++j) t[i][j] = problem.rows[i][j];
    t[i][n + i] = 1.0;
    t[i][cols - 1] = problem.rhs[i];
  }
  for (int j = 0; j < n; ++j) t[m][j] = -problem.objective[j];

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  SimplexSolution sol;
  const int max_iters = 2000 + 50 * (n + m);
  int degenerate_streak = 0;

  for (int iter = 0; iter < max_iters; ++iter) {
    const bool bland = degenerate_streak > n + m;
    int enter = -1;
    if (bland) {
      for (int j = 0; j < cols - 1; ++j) {
        if (t[m][j] < -kPivotTol) {
          enter = j;
          break;
        }
      }
    } else {
      double best = -kPivotTol;
      for (int j = 0; j < cols - 1; ++j) {
        if (t[m][j] < best) {
          best = t[m][j];
          enter = j;
        }
      }
    }
    if (enter < 0) {
      sol.optimal = true;
      sol.iterations = iter;
      break;
    }

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (t[i][enter] > kPivotTol) {
        const double ratio = t[i][cols - 1] / t[i][enter];
        if (ratio < best_ratio - kZeroTol ||
            (ratio < best_ratio + kZeroTol && (leave < 0 || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw Error("simplex: unbounded objective");
    degenerate_streak = best_ratio <= kZeroTol ? degenerate_streak + 1 : 0;

    const double piv = t[leave][enter];
    for (int j = 0; j < cols; ++j) t[leave][j] /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t[i][enter];
      if (f == 0.0) continue;
      for (int j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  if (!sol.optimal) throw Error("simplex: iteration limit exceeded");

  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) sol.x[basis[i]] = t[i][cols - 1];
  }
  sol.value = t[m][cols - 1];
  return sol;
}

}  // namespace udseq::detail
