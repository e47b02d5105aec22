#include "cdtm/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace cdtm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace

CgResult maximize(const Objective& f, const Gradient& g, std::span<const double> x0,
                  const CgSettings& settings) {
  const std::size_t n = x0.size();
  CgResult result;
  result.x.assign(x0.begin(), x0.end());
  if (n == 0) {
    result.converged = true;
    return result;
  }

  std::vector<double> grad(n), grad_prev(n), direction(n), candidate(n);
  double fx = f(result.x);
  result.trace.push_back(fx);
  g(result.x, grad);

  const int restart = settings.restart_period > 0 ? settings.restart_period
                                                  : static_cast<int>(n);
  int since_restart = 0;
  double trial = 1.0;  // adapts to the accepted step scale

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    const double grad_norm = std::sqrt(dot(grad, grad));
    result.grad_norm = grad_norm;
    if (grad_norm <= settings.grad_tolerance) {
      result.converged = true;
      break;
    }

    if (iter == 0 || since_restart >= restart) {
      direction = grad;
      since_restart = 0;
    } else {
      // Polak-Ribiere+ (ascent form).
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += grad[i] * (grad[i] - grad_prev[i]);
        den += grad_prev[i] * grad_prev[i];
      }
      const double beta = den > 0.0 ? std::max(0.0, num / den) : 0.0;
      for (std::size_t i = 0; i < n; ++i) direction[i] = grad[i] + beta * direction[i];
    }

    double slope = dot(grad, direction);
    if (slope <= 0.0) {
      // Not an ascent direction: restart on the gradient.
      direction = grad;
      slope = dot(grad, grad);
      since_restart = 0;
    }

    // Sample f at the trial step, then refine by the quadratic through
    // (f(x), slope, sample). The refinement is the exact line maximizer on
    // quadratics regardless of the trial scale.
    const auto eval_at = [&](double step) {
      for (std::size_t i = 0; i < n; ++i) candidate[i] = result.x[i] + step * direction[i];
      return f(candidate);
    };
    double step = trial;
    double f_step = eval_at(step);
    const double curvature = (f_step - fx - step * slope) / (step * step);
    if (std::isfinite(curvature) && curvature < 0.0) {
      const double refined =
          std::clamp(-slope / (2.0 * curvature), step * 1e-3, step * 100.0);
      const double f_refined = eval_at(refined);
      if (std::isfinite(f_refined) && f_refined > f_step) {
        step = refined;
        f_step = f_refined;
      }
    }

    bool accepted = false;
    for (int halving = 0; halving <= settings.max_halvings; ++halving) {
      if (std::isfinite(f_step) && f_step >= fx + settings.sufficient_increase * step * slope) {
        accepted = true;
        break;
      }
      step *= settings.backtrack_factor;
      f_step = eval_at(step);
    }
    if (!accepted) {
      result.line_search_warning = true;
      break;  // best-so-far is already in result.x
    }
    trial = 2.0 * step;

    for (std::size_t i = 0; i < n; ++i) result.x[i] += step * direction[i];
    fx = f_step;
    result.trace.push_back(fx);
    grad_prev = grad;
    g(result.x, grad);
    result.iterations = iter + 1;
    ++since_restart;
  }

  result.grad_norm = std::sqrt(dot(grad, grad));
  if (result.grad_norm <= settings.grad_tolerance) result.converged = true;
  return result;
}

}  // namespace cdtm
