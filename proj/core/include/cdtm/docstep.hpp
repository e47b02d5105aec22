#pragma once

#include <span>

namespace cdtm {

/// Per-document mean-field updates for topic proportions (gamma) and token
/// responsibilities (phi), given fixed expected log word-probabilities.
///
/// `ell` is the N x K row-major matrix ell[n*K + k] = sm_{t,k,w_n} -
/// log sum_w exp(sm_{t,k,w} + sV_{t,k,w}/2): the Jensen sub-distribution log
/// probability of token n under topic k at the document's tick.

/// phi_{n,k} proportional to exp(digamma(gamma_k) + ell_{n,k}), each row
/// normalized over k.
void update_phi(std::span<const double> ell, std::span<const double> gamma, int topics,
                std::span<double> phi_out);

/// gamma_k = alpha + sum_n phi_{n,k}.
void update_gamma(std::span<const double> phi, int topics, double alpha,
                  std::span<double> gamma_out);

/// Evidence bound of one document: Dirichlet cross-entropy/entropy terms for
/// (theta, z) plus sum_n sum_k phi_{n,k} ell_{n,k}. Nondecreasing under
/// alternating update_phi / update_gamma.
double doc_bound(std::span<const double> ell, std::span<const double> gamma,
                 std::span<const double> phi, int topics, double alpha);

struct DocStepResult {
  double bound = 0.0;
  int iterations = 0;
};

/// Alternates phi/gamma updates until the bound's relative change drops
/// below rel_tol or max_iterations is hit. gamma/phi are warm-started from
/// their incoming values.
DocStepResult doc_estep(std::span<const double> ell, int topics, double alpha, double rel_tol,
                        int max_iterations, std::span<double> gamma, std::span<double> phi);

}  // namespace cdtm
