#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgard/kernel.hpp"
#include "kgard/rng.hpp"
#include "kgard/solver.hpp"

namespace kgard {

/// Symmetric alpha-stable law S(alpha, beta = 0, gamma, delta = 0).
struct StableParams {
  double alpha = 2.0;
  double beta = 0.0;
  double gamma_scale = 1.0;
  double delta = 0.0;

  void validate() const;
};

/// Inlier noise (at most one of SNR, absolute sigma, alpha-stable) plus
/// sparse +-magnitude impulses.
struct NoiseSpec {
  std::optional<double> inlier_snr_db;
  std::optional<double> inlier_sigma;
  std::optional<StableParams> stable_params;
  double impulse_fraction = 0.0;
  double impulse_magnitude = 15.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Corruption {
  Vector observations;
  /// Impulse locations, ascending.
  std::vector<std::size_t> support;
  /// Impulse vector u (zero off the support).
  Vector outliers;
};

/// round-half-away-from-zero(fraction * n), validated against n.
std::size_t impulse_count(double fraction, std::size_t n);

Corruption corrupt(const Vector& truth, const NoiseSpec& spec);
/// Same, drawing from a caller-owned stream (spec.seed is ignored).
Corruption corrupt(const Vector& truth, const NoiseSpec& spec, SeededRng& rng);

/// One draw from S(alpha, 0, gamma, 0) by the Chambers-Mallows-Stuck transform.
double sample_stable(const StableParams& params, SeededRng& rng);

/// Noise-free train/validation split.
struct RegressionSplit {
  Dataset train;
  Dataset validation;
  Vector train_truth;
  Vector validation_truth;
};

/// 20 sin(2 pi^2 x) / (2 pi^2 x), i.e. 20 sinc(2 pi x) with the normalized
/// sinc(t) = sin(pi t)/(pi t); equals 20 at x = 0.
double sinc_target(double x);

/// 398 points x_i = -0.99 + 0.005 i; even zero-based indices train, odd validate.
RegressionSplit make_sinc_dataset();

struct LatticeOptions {
  std::size_t axis_points = 31;
  double sigma = 0.2;
  std::size_t nonzero_min = 2;
  std::size_t nonzero_max = 5;
  double coef_std = 25.6;
};

struct LatticeDataset {
  RegressionSplit split;
  PointSet lattice;
  /// Coefficients over all lattice nodes (row-major, axis_points^2 entries).
  Vector true_alpha;
};

/// Square lattice on [0,1]^2. Nodes with even (row, col) train, odd validate.
LatticeDataset make_lattice_dataset(SeededRng& rng, const LatticeOptions& options = {});

struct SupportOptions {
  std::size_t n = 100;
  double sigma = 0.1;
  std::size_t nonzero_min = 2;
  std::size_t nonzero_max = 23;
  double coef_std = 0.5;
};

/// Pure-outlier identification instance: f = K alpha with sparse alpha, no bias.
struct SupportInstance {
  PointSet points;
  std::shared_ptr<const Matrix> gram;
  Vector true_theta;  // (alpha; 0)
  Vector truth;
};

/// Equispaced points on [0,1] and the shared Gram matrix.
SupportInstance make_support_geometry(const SupportOptions& options = {});
/// Draws a new sparse alpha onto `geometry` (the Gram matrix is shared).
SupportInstance draw_support_instance(const SupportInstance& geometry, SeededRng& rng,
                                      const SupportOptions& options = {});

/// CSV with columns x1..xd, y, truth, is_outlier.
std::string dataset_csv(const PointSet& points, const Vector& observations,
                        const Vector& truth, const std::vector<std::size_t>& support);

}  // namespace kgard
