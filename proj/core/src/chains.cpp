#include "cdtm/chains.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cdtm {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double floor_variance(double value, double floor, ChainDiagnostics* diag) {
  if (value < floor) {
    if (diag) ++diag->variance_clamps;
    return floor;
  }
  return value;
}

}  // namespace

void ChainPosterior::resize(std::size_t n) {
  pred_var.resize(n);
  fwd_mean.resize(n);
  fwd_var.resize(n);
  smooth_mean.resize(n);
  smooth_var.resize(n);
  pred_logdens.resize(n);
}

void forward_filter(const ChainObservations& obs, const TimeGrid& grid, const ModelConfig& cfg,
                    ChainMoments out, ChainDiagnostics* diag) {
  const std::size_t n = obs.size();
  double mean = cfg.prior_mean;
  double var = cfg.v0;
  std::int64_t prev_stamp = grid.origin;
  for (std::size_t r = 0; r < n; ++r) {
    const std::int64_t stamp = grid.stamps[obs.ticks[r]];
    // Unobserved ticks in between only add diffusion, so one gap term
    // covers the whole stretch.
    const double pred =
        floor_variance(var + cfg.v * grid.elapsed(prev_stamp, stamp), cfg.variance_floor, diag);
    const double y = obs.values[r];
    const double total = pred + cfg.vhat;
    out.pred_var[r] = pred;
    out.pred_logdens[r] =
        -0.5 * (kLogTwoPi + std::log(total) + (y - mean) * (y - mean) / total);
    mean = (y * pred + cfg.vhat * mean) / total;
    var = floor_variance(cfg.vhat * pred / total, cfg.variance_floor, diag);
    out.fwd_mean[r] = mean;
    out.fwd_var[r] = var;
    prev_stamp = stamp;
  }
}

void backward_smooth(const ChainObservations& obs, const TimeGrid& grid, const ModelConfig& cfg,
                     ChainMoments out, ChainDiagnostics* diag) {
  const std::size_t n = obs.size();
  if (n == 0) return;
  out.smooth_mean[n - 1] = out.fwd_mean[n - 1];
  out.smooth_var[n - 1] = out.fwd_var[n - 1];
  for (std::size_t r = n - 1; r-- > 0;) {
    const double gain = out.fwd_var[r] / out.pred_var[r + 1];
    out.smooth_mean[r] = (1.0 - gain) * out.fwd_mean[r] + gain * out.smooth_mean[r + 1];
    out.smooth_var[r] = floor_variance(
        out.fwd_var[r] + gain * gain * (out.smooth_var[r + 1] - out.pred_var[r + 1]),
        cfg.variance_floor, diag);
  }
}

ChainPosterior filter_smooth(const ChainObservations& obs, const TimeGrid& grid,
                             const ModelConfig& cfg, ChainDiagnostics* diag) {
  ChainPosterior post;
  post.resize(obs.size());
  post.prior_mean = cfg.prior_mean;
  post.prior_var = cfg.v0;
  ChainMoments view{post.pred_var, post.fwd_mean, post.fwd_var,
                    post.smooth_mean, post.smooth_var, post.pred_logdens};
  forward_filter(obs, grid, cfg, view, diag);
  backward_smooth(obs, grid, cfg, view, diag);
  return post;
}

ChainView view(const ChainObservations& obs, const ChainPosterior& post) {
  return ChainView{obs.ticks,        post.pred_var,   post.fwd_mean,
                   post.fwd_var,     post.smooth_mean, post.smooth_var};
}

namespace {

// Shared bridge math given the bracketing slot data. `left_*` are forward
// moments at the left anchor (or the prior at the origin), `right_pred` the
// stored P at the right slot, `right_*` the smoothed moments there.
std::pair<double, double> bridge(double left_mean, double left_var, double elapsed_left, double v,
                                 double right_pred, double right_smean, double right_svar) {
  const double var_t = left_var + v * elapsed_left;
  const double c = var_t / right_pred;
  const double mean = (1.0 - c) * left_mean + c * right_smean;
  const double var = var_t + c * c * (right_svar - right_pred);
  return {mean, var};
}

std::pair<double, double> moments_at_impl(const ChainView& chain, const TimeGrid& grid,
                                          const ModelConfig& cfg, std::int64_t stamp,
                                          std::size_t next) {
  const std::size_t n = chain.size();
  if (next < n && grid.stamps[chain.ticks[next]] == stamp) {
    return {chain.smooth_mean[next], chain.smooth_var[next]};
  }
  if (n == 0) {
    return {cfg.prior_mean, cfg.v0 + cfg.v * grid.elapsed_from_origin(stamp)};
  }
  if (next == 0) {
    // Before the first observation: bridge from the prior at the origin.
    return bridge(cfg.prior_mean, cfg.v0, grid.elapsed(grid.origin, stamp), cfg.v,
                  chain.pred_var[0], chain.smooth_mean[0], chain.smooth_var[0]);
  }
  const std::size_t prev = next - 1;
  const std::int64_t prev_stamp = grid.stamps[chain.ticks[prev]];
  if (next == n) {
    // Past the last observation: pure diffusion.
    return {chain.fwd_mean[prev],
            chain.fwd_var[prev] + cfg.v * grid.elapsed(prev_stamp, stamp)};
  }
  return bridge(chain.fwd_mean[prev], chain.fwd_var[prev], grid.elapsed(prev_stamp, stamp), cfg.v,
                chain.pred_var[next], chain.smooth_mean[next], chain.smooth_var[next]);
}

}  // namespace

std::pair<double, double> moments_at_stamp(const ChainView& chain, const TimeGrid& grid,
                                           const ModelConfig& cfg, std::int64_t stamp) {
  // First slot whose stamp is >= the query.
  const auto begin = chain.ticks.begin();
  const auto it = std::lower_bound(begin, chain.ticks.end(), stamp,
                                   [&](std::int32_t tick, std::int64_t s) {
                                     return grid.stamps[tick] < s;
                                   });
  return moments_at_impl(chain, grid, cfg, stamp, static_cast<std::size_t>(it - begin));
}

std::pair<double, double> moments_at_tick(const ChainView& chain, const TimeGrid& grid,
                                          const ModelConfig& cfg, int tick) {
  return moments_at_stamp(chain, grid, cfg, grid.stamps[tick]);
}

MomentWalker::MomentWalker(const ChainView& chain, const TimeGrid& grid, const ModelConfig& cfg)
    : chain_(chain), grid_(grid), cfg_(cfg) {}

std::pair<double, double> MomentWalker::at(int tick) {
  while (next_ < chain_.size() && chain_.ticks[next_] < tick) ++next_;
  return moments_at_impl(chain_, grid_, cfg_, grid_.stamps[tick], next_);
}

ChainSample sample_chain(const TimeGrid& grid, const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  ChainSample sample;
  sample.initial = cfg.prior_mean + std::sqrt(cfg.v0) * unit(rng);
  sample.values.resize(grid.ticks());
  double value = sample.initial;
  for (int t = 0; t < grid.ticks(); ++t) {
    value += std::sqrt(cfg.v * grid.gap(t)) * unit(rng);
    sample.values[t] = value;
  }
  return sample;
}

void softmax_map(std::span<const double> natural, std::span<double> probs_out) {
  const double shift = *std::max_element(natural.begin(), natural.end());
  double norm = 0.0;
  for (std::size_t i = 0; i < natural.size(); ++i) {
    probs_out[i] = std::exp(natural[i] - shift);
    norm += probs_out[i];
  }
  for (auto& p : probs_out) p /= norm;
}

std::vector<double> softmax_map(std::span<const double> natural) {
  std::vector<double> probs(natural.size());
  softmax_map(natural, probs);
  return probs;
}

}  // namespace cdtm
