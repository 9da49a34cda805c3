#include "kgard/denoise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "json.hpp"
#include "kgard/errors.hpp"
#include "kgard/parallel.hpp"
#include "kgard/solver.hpp"

namespace kgard {

void RoiConfig::validate(bool allow_equal) const {
  if (core_size < 1) throw ArgumentError("core size L must be at least 1");
  if (roi_size < core_size || (roi_size == core_size && !allow_equal)) {
    throw ArgumentError("ROI size N must exceed core size L");
  }
  if ((roi_size - core_size) % 2 != 0) throw ArgumentError("N - L must be even");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be positive");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) throw ArgumentError("lambda0 must be positive");
  if (!(e0 > 0.0)) throw ArgumentError("e0 must be positive");
}

TilePlan tile_plan(const GrayImage& image, const RoiConfig& cfg, bool allow_equal) {
  cfg.validate(allow_equal);
  if (image.empty()) throw ArgumentError("image is empty");
  const std::size_t l = cfg.core_size;
  TilePlan p;
  p.image_width = image.width();
  p.image_height = image.height();
  p.extended_width = (image.width() + l - 1) / l * l;
  p.extended_height = (image.height() + l - 1) / l * l;
  p.pad = cfg.pad();
  p.padded_width = p.extended_width + 2 * p.pad;
  p.padded_height = p.extended_height + 2 * p.pad;
  p.roi_size = cfg.roi_size;
  p.core_size = l;
  for (std::size_t r = 0; r < p.extended_height; r += l) {
    for (std::size_t c = 0; c < p.extended_width; c += l) p.roi_origins.emplace_back(r, c);
  }
  return p;
}

GrayImage pad_image(const GrayImage& image, const TilePlan& plan) {
  if (image.width() != plan.image_width || image.height() != plan.image_height) {
    throw ArgumentError("tile plan does not match the image");
  }
  GrayImage out(plan.padded_width, plan.padded_height);
  const auto pad = static_cast<long>(plan.pad);
  for (std::size_t r = 0; r < plan.padded_height; ++r) {
    for (std::size_t c = 0; c < plan.padded_width; ++c) {
      out.at(r, c) = image.clamped(static_cast<long>(r) - pad, static_cast<long>(c) - pad);
    }
  }
  return out;
}

Vector rearrange(const Matrix& roi) {
  if (roi.rows() != roi.cols()) throw ArgumentError("rearrange: ROI must be square");
  const Eigen::Index n = roi.rows();
  Vector v(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) v(i * n + j) = roi(i, j);
  }
  return v;
}

Matrix unrearrange(const Vector& v, std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  if (v.size() != nn * nn) throw ArgumentError("unrearrange: length is not N^2");
  Matrix roi(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = 0; j < nn; ++j) roi(i, j) = v(i * nn + j);
  }
  return roi;
}

GrayImage gradient_magnitude(const GrayImage& image) {
  GrayImage g(image.width(), image.height());
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      const auto ri = static_cast<long>(r);
      const auto ci = static_cast<long>(c);
      const double gx = 0.5 * (image.clamped(ri, ci + 1) - image.clamped(ri, ci - 1));
      const double gy = 0.5 * (image.clamped(ri + 1, ci) - image.clamped(ri - 1, ci));
      g.at(r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

LambdaMap auto_lambda_map(const GrayImage& image, const TilePlan& plan, const RoiConfig& cfg) {
  const GrayImage grad = gradient_magnitude(pad_image(image, plan));
  const std::size_t n = plan.roi_size;
  LambdaMap map;
  map.mean_gradients.reserve(plan.roi_origins.size());
  for (const auto& [r0, c0] : plan.roi_origins) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) sum += grad.at(r0 + i, c0 + j);
    }
    map.mean_gradients.push_back(sum / static_cast<double>(n * n));
  }
  const auto count = static_cast<double>(map.mean_gradients.size());
  for (double v : map.mean_gradients) map.m += v;
  map.m /= count;
  if (map.mean_gradients.size() > 1) {
    double ss = 0.0;
    for (double v : map.mean_gradients) ss += (v - map.m) * (v - map.m);
    map.s = std::sqrt(ss / (count - 1.0));
  }
  map.lambdas.reserve(map.mean_gradients.size());
  for (double v : map.mean_gradients) {
    if (v > map.m + map.s) {
      map.lambdas.push_back(cfg.lambda0);
    } else if (v < map.m - map.s / 10.0) {
      map.lambdas.push_back(15.0 * cfg.lambda0);
    } else {
      map.lambdas.push_back(5.0 * cfg.lambda0);
    }
  }
  return map;
}

EpsilonHistogram epsilon_histogram(const Vector& a) {
  if (a.size() == 0) throw ArgumentError("epsilon_histogram: empty residual");
  if ((a.array() < 0.0).any()) throw ArgumentError("epsilon_histogram: residual magnitudes must be non-negative");
  EpsilonHistogram h;
  h.bin_count = static_cast<std::size_t>(a.size()) / 10 + 1;
  const double lo = a.minCoeff();
  const double hi = a.maxCoeff();
  const std::size_t nb = h.bin_count;
  h.edges.resize(nb + 1);
  for (std::size_t i = 0; i <= nb; ++i) {
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nb);
  }
  h.edges[nb] = hi;
  h.heights.assign(nb, 0);
  if (hi - lo < 1e-9) {
    h.degenerate = true;
    h.heights[0] = static_cast<std::size_t>(a.size());
    h.e1 = lo;
    return h;
  }
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double v = a(i);
    auto b = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(nb)));
    b = std::min(b, nb - 1);
    // Settle on the half-open bin [edges[b], edges[b+1]); the last bin is closed.
    while (b > 0 && v < h.edges[b]) --b;
    while (b + 1 < nb && v >= h.edges[b + 1]) ++b;
    ++h.heights[b];
  }
  h.h_min = *std::min_element(h.heights.begin(), h.heights.end());
  for (std::size_t i = 0; i < nb; ++i) {
    if (h.heights[i] == h.h_min) {
      h.e1 = h.edges[i];
      break;
    }
  }
  for (std::size_t l = 1; l < nb; ++l) {
    if (h.heights[l] >= h.heights[l - 1] + 1 && h.heights[l - 1] <= h.h_min + 5) {
      h.e2 = h.edges[l];
      break;
    }
  }
  const double mean = static_cast<double>(a.size()) / static_cast<double>(nb);
  if (nb > 1) {
    double ss = 0.0;
    for (std::size_t v : h.heights) ss += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
    h.dispersion = std::sqrt(ss / static_cast<double>(nb - 1)) / mean;
  }
  return h;
}

double auto_epsilon(const Vector& residual_abs, double e0) {
  const EpsilonHistogram h = epsilon_histogram(residual_abs);
  if (h.degenerate) return e0;
  const double base = std::min(e0, h.e1);
  return h.dispersion > 0.9 ? std::min(base, h.e2) : base;
}

StopRule parse_stop_rule(const std::string& name) {
  if (name == "gated") return StopRule::Gated;
  if (name == "literal") return StopRule::Literal;
  if (name == "fixed") return StopRule::Fixed;
  throw ArgumentError("unknown stop rule '" + name + "' (expected gated, literal or fixed)");
}

std::string stop_rule_name(StopRule rule) {
  switch (rule) {
    case StopRule::Gated: return "gated";
    case StopRule::Literal: return "literal";
    case StopRule::Fixed: return "fixed";
  }
  return "unknown";
}

double stop_threshold(const Vector& residual, double e0, StopRule rule) {
  if (rule == StopRule::Fixed) return e0;
  const Vector a = residual.cwiseAbs();
  if (rule == StopRule::Literal) return auto_epsilon(a, e0);
  const EpsilonHistogram h = epsilon_histogram(a);
  if (h.degenerate || h.h_min != 0 || !(h.dispersion > 0.9)) return e0;
  return std::min({e0, h.e1, h.e2});
}

namespace {

int tier_of(double lambda, double lambda0) {
  if (lambda == lambda0) return 1;
  if (lambda == 5.0 * lambda0) return 5;
  return 15;
}

double snap_outlier(double u) { return std::ldexp(std::round(std::ldexp(u, 24)), -24); }

// One KGARD model per lambda tier over the shared ROI Gram matrix.
RoiSolver kgard_roi_solver(const RoiConfig& cfg, StopRule rule) {
  const std::size_t n = cfg.roi_size;
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) axis[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  Matrix pts(static_cast<Eigen::Index>(n * n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pts(static_cast<Eigen::Index>(i * n + j), 0) = axis[i];
      pts(static_cast<Eigen::Index>(i * n + j), 1) = axis[j];
    }
  }
  auto gram = std::make_shared<const Matrix>(gram_matrix(PointSet(pts), KernelParams{cfg.sigma}));

  std::array<std::shared_ptr<const KgardModel>, 3> models;
  const std::array<double, 3> tiers = {cfg.lambda0, 5.0 * cfg.lambda0, 15.0 * cfg.lambda0};
  for (std::size_t t = 0; t < 3; ++t) {
    KgardConfig kc;
    kc.lambda = tiers[t];
    kc.epsilon = cfg.e0;
    kc.regularizer = RegularizerKind::CoefficientNorm;
    kc.stop_norm = StopNorm::Linf;
    kc.max_selections = n * n / 3;
    const double e0 = cfg.e0;
    kc.epsilon_rule = [e0, rule](const Vector& r) { return stop_threshold(r, e0, rule); };
    models[t] = std::make_shared<const KgardModel>(gram, kc);
  }
  return [models, tiers, gram](const Vector& zeta, double lambda) {
    std::size_t t = 0;
    while (t < 2 && tiers[t] != lambda) ++t;
    if (tiers[t] != lambda) throw ArgumentError("ROI lambda is not one of the three tiers");
    const KgardSolution sol = models[t]->fit(zeta);
    RoiFit fit;
    fit.fitted = fitted_values(*gram, sol);
    fit.outliers = sol.outlier_vector(static_cast<std::size_t>(zeta.size()));
    fit.final_epsilon = sol.final_epsilon;
    fit.selections = sol.outliers.size();
    fit.truncated = sol.truncated;
    return fit;
  };
}

}  // namespace

DenoiseResult denoise_image(const GrayImage& image, const RoiConfig& cfg,
                            const DenoiseOptions& options) {
  DenoiseResult res;
  res.plan = tile_plan(image, cfg, static_cast<bool>(options.solver));
  const TilePlan& plan = res.plan;
  const GrayImage padded = pad_image(image, plan);
  res.lambda_map = auto_lambda_map(image, plan, cfg);
  const RoiSolver solver = options.solver ? options.solver : kgard_roi_solver(cfg, options.stop_rule);

  const std::size_t n = plan.roi_size;
  const std::size_t l = plan.core_size;
  const std::size_t p = plan.pad;
  GrayImage fitted_ext(plan.extended_width, plan.extended_height);
  GrayImage outlier_ext(plan.extended_width, plan.extended_height);
  res.rois.resize(plan.roi_origins.size());

  parallel_for(plan.roi_origins.size(), options.threads, [&](std::size_t k) {
    const auto [r0, c0] = plan.roi_origins[k];
    const auto nn = static_cast<Eigen::Index>(n);
    Vector zeta(nn * nn);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        zeta(static_cast<Eigen::Index>(i * n + j)) = padded.at(r0 + i, c0 + j);
      }
    }
    RoiDiagnostics& d = res.rois[k];
    d.row = r0;
    d.col = c0;
    d.lambda = res.lambda_map.lambdas[k];
    d.tier = tier_of(d.lambda, cfg.lambda0);
    RoiFit fit;
    try {
      fit = solver(zeta, d.lambda);
      if (fit.fitted.size() != zeta.size() || fit.outliers.size() != zeta.size()) {
        throw LogicError("ROI solver returned vectors of the wrong length");
      }
      d.final_epsilon = fit.final_epsilon;
      d.outliers = fit.selections;
      d.truncated = fit.truncated;
    } catch (const std::exception& e) {
      d.failed = true;
      d.error = e.what();
      fit.fitted = zeta;
      fit.outliers = Vector::Zero(zeta.size());
    }
    // Cores are disjoint, so concurrent writes never overlap.
    for (std::size_t i = 0; i < l; ++i) {
      for (std::size_t j = 0; j < l; ++j) {
        const auto idx = static_cast<Eigen::Index>((p + i) * n + (p + j));
        fitted_ext.at(r0 + i, c0 + j) = fit.fitted(idx);
        outlier_ext.at(r0 + i, c0 + j) = snap_outlier(fit.outliers(idx));
      }
    }
  });

  for (std::size_t k = 0; k < res.rois.size(); ++k) {
    if (res.rois[k].failed) res.failed_rois.push_back(k);
  }
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  res.denoised = GrayImage(w, h);
  res.outlier_map = GrayImage(w, h);
  res.impulse_removed = GrayImage(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      res.denoised.at(r, c) = fitted_ext.at(r, c);
      res.outlier_map.at(r, c) = outlier_ext.at(r, c);
      res.impulse_removed.at(r, c) = image.at(r, c) - outlier_ext.at(r, c);
    }
  }
  return res;
}

std::string diagnostics_json(const DenoiseResult& result, const RoiConfig& cfg) {
  using nlohmann::json;
  json rois = json::array();
  for (const auto& d : result.rois) {
    json j = {{"row", d.row},
              {"col", d.col},
              {"lambda", d.lambda},
              {"tier", d.tier},
              {"final_epsilon", d.final_epsilon},
              {"outliers", d.outliers},
              {"iterations", d.outliers},
              {"truncated", d.truncated},
              {"failed", d.failed}};
    if (d.failed) j["error"] = d.error;
    rois.push_back(std::move(j));
  }
  json doc = {{"roi_size", cfg.roi_size},
              {"core_size", cfg.core_size},
              {"sigma", cfg.sigma},
              {"lambda0", cfg.lambda0},
              {"e0", cfg.e0},
              {"gradient_mean", result.lambda_map.m},
              {"gradient_std", result.lambda_map.s},
              {"rois", std::move(rois)},
              {"failed_rois", result.failed_rois}};
  return doc.dump(2) + "\n";
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ArgumentError("psnr: image dimensions differ");
  }
  if (a.empty()) throw ArgumentError("psnr: images are empty");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace kgard
