#include "cdtm/docstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

namespace cdtm {

namespace {

double digamma(double x) { return boost::math::digamma(x); }

}  // namespace

void update_phi(std::span<const double> ell, std::span<const double> gamma, int topics,
                std::span<double> phi_out) {
  const std::size_t tokens = ell.size() / topics;
  std::vector<double> dig(topics);
  for (int k = 0; k < topics; ++k) dig[k] = digamma(gamma[k]);

  for (std::size_t n = 0; n < tokens; ++n) {
    double* row = phi_out.data() + n * topics;
    const double* ell_row = ell.data() + n * topics;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < topics; ++k) {
      row[k] = dig[k] + ell_row[k];
      best = std::max(best, row[k]);
    }
    double norm = 0.0;
    for (int k = 0; k < topics; ++k) {
      row[k] = std::exp(row[k] - best);
      norm += row[k];
    }
    for (int k = 0; k < topics; ++k) row[k] /= norm;
  }
}

void update_gamma(std::span<const double> phi, int topics, double alpha,
                  std::span<double> gamma_out) {
  const std::size_t tokens = phi.size() / topics;
  for (int k = 0; k < topics; ++k) gamma_out[k] = alpha;
  for (std::size_t n = 0; n < tokens; ++n) {
    const double* row = phi.data() + n * topics;
    for (int k = 0; k < topics; ++k) gamma_out[k] += row[k];
  }
}

double doc_bound(std::span<const double> ell, std::span<const double> gamma,
                 std::span<const double> phi, int topics, double alpha) {
  const std::size_t tokens = ell.size() / topics;

  double gamma_sum = 0.0;
  for (int k = 0; k < topics; ++k) gamma_sum += gamma[k];
  const double dig_sum = digamma(gamma_sum);

  // E[log p(theta | alpha)] - E[log q(theta | gamma)]
  double bound = std::lgamma(topics * alpha) - topics * std::lgamma(alpha) -
                 std::lgamma(gamma_sum);
  std::vector<double> dig(topics);
  for (int k = 0; k < topics; ++k) {
    dig[k] = digamma(gamma[k]) - dig_sum;
    bound += std::lgamma(gamma[k]);
    bound += (alpha - gamma[k]) * dig[k];
  }

  // Token terms: E[log p(z|theta)] + E[log p(w|z,beta)] + H(q(z)).
  for (std::size_t n = 0; n < tokens; ++n) {
    const double* row = phi.data() + n * topics;
    const double* ell_row = ell.data() + n * topics;
    for (int k = 0; k < topics; ++k) {
      if (row[k] <= 0.0) continue;
      bound += row[k] * (dig[k] + ell_row[k] - std::log(row[k]));
    }
  }
  return bound;
}

DocStepResult doc_estep(std::span<const double> ell, int topics, double alpha, double rel_tol,
                        int max_iterations, std::span<double> gamma, std::span<double> phi) {
  DocStepResult result;
  result.bound = doc_bound(ell, gamma, phi, topics, alpha);
  for (int it = 0; it < max_iterations; ++it) {
    update_phi(ell, gamma, topics, phi);
    update_gamma(phi, topics, alpha, gamma);
    const double next = doc_bound(ell, gamma, phi, topics, alpha);
    result.iterations = it + 1;
    const double scale = std::max({1.0, std::abs(next), std::abs(result.bound)});
    const bool done = (next - result.bound) / scale < rel_tol;
    result.bound = next;
    if (done) break;
  }
  return result;
}

}  // namespace cdtm
