#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cdtm {

/// Nonlinear conjugate-gradient maximizer (Polak-Ribiere+ with restarts,
/// backtracking line search with sufficient increase).
struct CgSettings {
  int max_iterations = 100;
  double grad_tolerance = 1e-8;      // stop when ||g||_2 <= this
  double sufficient_increase = 1e-4; // Armijo c1
  double backtrack_factor = 0.5;     // in (0, 1)
  int restart_period = 0;            // 0: restart every n dimensions
  int max_halvings = 50;
};

struct CgResult {
  std::vector<double> x;
  std::vector<double> trace;  // objective after the start and each accepted step
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_warning = false;  // no acceptable step within max_halvings
};

using Objective = std::function<double(std::span<const double>)>;
using Gradient = std::function<void(std::span<const double>, std::span<double>)>;

/// Maximizes f from x0. The first line-search candidate comes from a
/// quadratic fit through (f(x), g'd, f(x + d)), which makes the search exact
/// on quadratics (so CG terminates in n steps there); Armijo backtracking
/// takes over otherwise. The trace is nondecreasing: a step is only accepted
/// when it improves f.
CgResult maximize(const Objective& f, const Gradient& g, std::span<const double> x0,
                  const CgSettings& settings);

}  // namespace cdtm
