#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cdtm {

/// Resolution at which document time stamps index the time grid.
/// `raw` keeps stamps unbucketed (one tick per distinct stamp).
enum class Granularity : std::uint8_t { raw = 0, hour, day, week, month };

std::string_view to_string(Granularity g);
std::optional<Granularity> granularity_from_string(std::string_view name);

/// Hyperparameters and convergence knobs for one model.
///
/// `v` is the Brownian variance per grid unit (seconds for raw/hour grids,
/// days otherwise); the CLI derives it from a whole-period variance so that
/// models at different granularities stay comparable.
struct ModelConfig {
  int topics = 1;            // K
  double v = 1.0;            // diffusion variance per grid unit
  double v0 = 1.0;           // prior variance of the initial state
  double prior_mean = 0.0;   // m, shared by all words and topics
  double alpha = 1.0;        // symmetric Dirichlet concentration
  double vhat = 1.0;         // pseudo-observation variance

  Granularity granularity = Granularity::day;

  double outer_tol = 1e-4;        // relative objective change stopping the outer loop
  int max_outer_iterations = 100;
  double doc_tol = 1e-6;          // per-document E-step stopping rule
  int max_doc_iterations = 100;
  int cg_iterations = 20;         // per-topic CG budget per outer iteration
  double cg_grad_tol = 1e-6;
  double jitter_std = 0.1;        // topic-splitting noise at initialization
  double variance_floor = 1e-10;  // lower clamp guarding divisions

  std::uint64_t seed = 0;
  bool deterministic = true;

  /// Throws std::invalid_argument if any invariant fails
  /// (topics >= 1, v > 0, v0 > 0, alpha > 0, vhat > 0, ...).
  void validate() const;
};

}  // namespace cdtm
