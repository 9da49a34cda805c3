#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgard/image.hpp"
#include "kgard/kernel.hpp"

namespace kgard {

struct RoiConfig {
  std::size_t roi_size = 12;  // N
  std::size_t core_size = 8;  // L
  double sigma = 0.3;
  double lambda0 = 1.0;
  double e0 = 40.0;

  /// N > L >= 1 and N - L even. `allow_equal` admits N == L (tiling tests).
  void validate(bool allow_equal = false) const;
  std::size_t pad() const { return (roi_size - core_size) / 2; }
};

struct TilePlan {
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  /// Image size rounded up to multiples of L.
  std::size_t extended_width = 0;
  std::size_t extended_height = 0;
  std::size_t padded_width = 0;
  std::size_t padded_height = 0;
  std::size_t pad = 0;
  std::size_t roi_size = 0;
  std::size_t core_size = 0;
  /// (row, col) of each ROI in padded coordinates, raster order.
  std::vector<std::pair<std::size_t, std::size_t>> roi_origins;
};

TilePlan tile_plan(const GrayImage& image, const RoiConfig& cfg, bool allow_equal = false);

/// Padded (and L-extended) image: pixel (r, c) = image(clamp(r - pad), clamp(c - pad)).
GrayImage pad_image(const GrayImage& image, const TilePlan& plan);

/// Row-major flattening: pixel (i, j) goes to position i*N + j.
Vector rearrange(const Matrix& roi);
Matrix unrearrange(const Vector& v, std::size_t n);

/// Central differences with replicated borders; sqrt(gx^2 + gy^2).
GrayImage gradient_magnitude(const GrayImage& image);

struct LambdaMap {
  std::vector<double> lambdas;
  std::vector<double> mean_gradients;
  double m = 0.0;
  double s = 0.0;
};

LambdaMap auto_lambda_map(const GrayImage& image, const TilePlan& plan, const RoiConfig& cfg);

struct EpsilonHistogram {
  std::size_t bin_count = 0;
  std::vector<double> edges;
  std::vector<std::size_t> heights;
  std::size_t h_min = 0;
  double e1 = 0.0;
  /// +inf when no bar satisfies the scan.
  double e2 = std::numeric_limits<double>::infinity();
  double dispersion = 0.0;
  bool degenerate = false;
};

EpsilonHistogram epsilon_histogram(const Vector& residual_abs);
/// min{E0, E1, E2} if dispersion > 0.9, else min{E0, E1}; E0 when degenerate.
double auto_epsilon(const Vector& residual_abs, double e0);

enum class StopRule {
  /// auto_epsilon only when the histogram shows a separated cluster
  /// (dispersion > 0.9 and an empty bar), E0 otherwise.
  Gated,
  /// ||r||_inf <= auto_epsilon every iteration.
  Literal,
  /// ||r||_inf <= E0.
  Fixed,
};

StopRule parse_stop_rule(const std::string& name);
std::string stop_rule_name(StopRule rule);

/// Threshold used by the stopping test for residual r under `rule`.
double stop_threshold(const Vector& residual, double e0, StopRule rule);

struct RoiFit {
  Vector fitted;    // N^2 values K alpha + c 1
  Vector outliers;  // N^2 values u
  double final_epsilon = 0.0;
  std::size_t selections = 0;
  bool truncated = false;
};

/// Fits one rearranged ROI at the given lambda.
using RoiSolver = std::function<RoiFit(const Vector& zeta, double lambda)>;

struct DenoiseOptions {
  std::size_t threads = 1;
  StopRule stop_rule = StopRule::Gated;
  /// Replaces the KGARD fit (used to test the tiling).
  RoiSolver solver;
};

struct RoiDiagnostics {
  std::size_t row = 0;
  std::size_t col = 0;
  double lambda = 0.0;
  int tier = 0;  // 1, 5 or 15
  double final_epsilon = 0.0;
  std::size_t outliers = 0;
  bool truncated = false;
  bool failed = false;
  std::string error;
};

struct DenoiseResult {
  GrayImage denoised;
  GrayImage outlier_map;
  GrayImage impulse_removed;
  TilePlan plan;
  LambdaMap lambda_map;
  std::vector<RoiDiagnostics> rois;
  std::vector<std::size_t> failed_rois;
};

/// Outlier values are snapped to multiples of 2^-24 so that for 8-bit input
/// impulse_removed + outlier_map reproduces the image exactly.
DenoiseResult denoise_image(const GrayImage& image, const RoiConfig& cfg,
                            const DenoiseOptions& options = {});

std::string diagnostics_json(const DenoiseResult& result, const RoiConfig& cfg);

/// 10 log10(255^2 / MSE); +inf for identical images.
double psnr(const GrayImage& a, const GrayImage& b);

}  // namespace kgard
