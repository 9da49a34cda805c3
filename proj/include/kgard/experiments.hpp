#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgard/noise_lab.hpp"
#include "kgard/solver.hpp"

namespace kgard {

struct SupportMetrics {
  double correct = 0.0;  // |S n T| / |T|
  double wrong = 0.0;    // |S \ T| / |T|
};

/// ArgumentError when `truth` is empty.
SupportMetrics support_metrics(std::span<const std::size_t> estimated,
                               std::span<const std::size_t> truth);

enum class Protocol { Sinc1d, Lattice2d, Stable1d };

std::string protocol_name(Protocol p);
Protocol parse_protocol(const std::string& name);

struct TrialResult {
  std::uint64_t seed = 0;
  double mse_validation = 0.0;
  /// Empty when the trial had no impulses.
  std::optional<SupportMetrics> support;
  double wall_time_seconds = 0.0;
  std::size_t selections = 0;
  bool failed = false;
  std::string error;
};

struct AggregateStats {
  double mean_mse = 0.0;
  double std_mse = 0.0;
  /// Averaged over trials with a non-empty true support.
  double mean_correct = 0.0;
  double mean_wrong = 0.0;
  double mean_time = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::size_t support_trials = 0;
};

struct MonteCarloOptions {
  Protocol protocol = Protocol::Sinc1d;
  NoiseSpec noise;
  KgardConfig config;
  std::size_t trials = 200;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  /// Fitting kernel width; defaults to 0.15 (1-D) or 0.2 (lattice).
  std::optional<double> kernel_sigma;
  /// Multiply lambda by 5 on the first and last five kernel coefficients
  /// (1-D protocols only, ignored when config.tikhonov_weights is set).
  bool border_boost = true;
  LatticeOptions lattice;
};

struct MonteCarloReport {
  std::vector<TrialResult> trials;
  AggregateStats aggregate;
};

/// Trial t uses seed base_seed + t; results do not depend on `threads`.
MonteCarloReport run_monte_carlo(const MonteCarloOptions& options);

/// Tikhonov weights sqrt(5) on the first and last `width` kernel coefficients.
Vector border_boost_weights(std::size_t n, std::size_t width = 5, double factor = 5.0);

/// One row per trial: seed,mse,correct,wrong,seconds,failed.
/// With `timing` false the seconds column is written as 0.
std::string trials_csv(const MonteCarloReport& report, bool timing = true);
/// One-row summary table (column list in the README).
std::string aggregate_csv(const MonteCarloReport& report, const MonteCarloOptions& options,
                          bool timing = true);

struct SweepOptions {
  std::vector<double> magnitudes;
  double fraction = 0.1;
  std::size_t trials = 200;
  double lambda = 5000.0;
  double epsilon = 50.0;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  SupportOptions instance;
};

struct SweepRow {
  double magnitude = 0.0;
  double mean_correct = 0.0;
  double mean_wrong = 0.0;
  double bound_hold_rate = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
};

/// Pure-outlier identification sweep. Trial t of every magnitude draws its
/// instance from seed base_seed + t.
std::vector<SweepRow> sweep_outlier_magnitude(const SweepOptions& options);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace kgard
