#include "kgard/noise_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kgard/errors.hpp"
#include "kgard/format.hpp"

namespace kgard {

void StableParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ArgumentError("stable alpha must lie in (0, 2]");
  if (beta != 0.0) throw ArgumentError("only symmetric stable noise (beta = 0) is supported");
  if (!(gamma_scale > 0.0)) throw ArgumentError("stable gamma must be positive");
  if (delta != 0.0) throw ArgumentError("stable location delta must be 0");
}

void NoiseSpec::validate() const {
  const int inlier_models = static_cast<int>(inlier_snr_db.has_value()) +
                            static_cast<int>(inlier_sigma.has_value()) +
                            static_cast<int>(stable_params.has_value());
  if (inlier_models > 1) {
    throw ArgumentError("set at most one of inlier SNR, inlier sigma and stable noise");
  }
  if (inlier_snr_db && !std::isfinite(*inlier_snr_db)) {
    throw ArgumentError("inlier SNR must be finite");
  }
  if (inlier_sigma && !(*inlier_sigma >= 0.0)) {
    throw ArgumentError("inlier sigma must be non-negative");
  }
  if (stable_params) stable_params->validate();
  if (!(impulse_fraction >= 0.0 && impulse_fraction < 1.0)) {
    throw ArgumentError("impulse fraction must lie in [0, 1)");
  }
  if (!(impulse_magnitude >= 0.0) || !std::isfinite(impulse_magnitude)) {
    throw ArgumentError("impulse magnitude must be finite and non-negative");
  }
}

std::size_t impulse_count(double fraction, std::size_t n) {
  const auto count = static_cast<std::size_t>(std::round(fraction * static_cast<double>(n)));
  if (count >= n && count > 0) {
    throw ArgumentError("impulse count " + std::to_string(count) + " leaves no inliers out of " +
                        std::to_string(n));
  }
  return count;
}

double sample_stable(const StableParams& p, SeededRng& rng) {
  const double v = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  if (p.alpha == 1.0) return p.gamma_scale * std::tan(v);
  const double a = p.alpha;
  const double x = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
                   std::pow(std::cos(v - a * v) / w, (1.0 - a) / a);
  return p.gamma_scale * x;
}

Corruption corrupt(const Vector& truth, const NoiseSpec& spec) {
  SeededRng rng(spec.seed);
  return corrupt(truth, spec, rng);
}

Corruption corrupt(const Vector& truth, const NoiseSpec& spec, SeededRng& rng) {
  spec.validate();
  const auto n = static_cast<std::size_t>(truth.size());
  const std::size_t count = impulse_count(spec.impulse_fraction, n);

  Corruption out;
  out.observations = truth;
  if (spec.inlier_snr_db || spec.inlier_sigma) {
    double sigma = 0.0;
    if (spec.inlier_sigma) {
      sigma = *spec.inlier_sigma;
    } else if (n > 0) {
      const double power = truth.squaredNorm() / static_cast<double>(n);
      sigma = std::sqrt(power / std::pow(10.0, *spec.inlier_snr_db / 10.0));
    }
    for (std::size_t i = 0; i < n; ++i) out.observations(static_cast<Eigen::Index>(i)) += sigma * rng.normal();
  } else if (spec.stable_params) {
    for (std::size_t i = 0; i < n; ++i) {
      out.observations(static_cast<Eigen::Index>(i)) += sample_stable(*spec.stable_params, rng);
    }
  }

  out.outliers = Vector::Zero(static_cast<Eigen::Index>(n));
  out.support = rng.sample_without_replacement(n, count);
  for (std::size_t j : out.support) {
    out.outliers(static_cast<Eigen::Index>(j)) = spec.impulse_magnitude * rng.sign();
  }
  std::sort(out.support.begin(), out.support.end());
  out.observations += out.outliers;
  return out;
}

double sinc_target(double x) {
  const double t = 2.0 * std::numbers::pi * std::numbers::pi * x;
  return t == 0.0 ? 20.0 : 20.0 * std::sin(t) / t;
}

RegressionSplit make_sinc_dataset() {
  constexpr std::size_t total = 398;
  std::vector<double> tx, vx;
  for (std::size_t i = 0; i < total; ++i) {
    const double x = -0.99 + 0.005 * static_cast<double>(i);
    (i % 2 == 0 ? tx : vx).push_back(x);
  }
  auto truth_of = [](const std::vector<double>& xs) {
    Vector f(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) f(static_cast<Eigen::Index>(i)) = sinc_target(xs[i]);
    return f;
  };
  RegressionSplit s;
  s.train_truth = truth_of(tx);
  s.validation_truth = truth_of(vx);
  s.train = Dataset{PointSet::from_scalars(tx), s.train_truth};
  s.validation = Dataset{PointSet::from_scalars(vx), s.validation_truth};
  return s;
}

LatticeDataset make_lattice_dataset(SeededRng& rng, const LatticeOptions& o) {
  if (o.axis_points < 2) throw ArgumentError("lattice needs at least two points per axis");
  if (o.nonzero_min > o.nonzero_max) throw ArgumentError("lattice: nonzero_min > nonzero_max");
  const std::size_t m = o.axis_points;
  const std::size_t total = m * m;
  if (o.nonzero_max > total) throw ArgumentError("lattice: nonzero_max exceeds the node count");

  Matrix nodes(static_cast<Eigen::Index>(total), 2);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const auto i = static_cast<Eigen::Index>(r * m + c);
      nodes(i, 0) = static_cast<double>(r) / static_cast<double>(m - 1);
      nodes(i, 1) = static_cast<double>(c) / static_cast<double>(m - 1);
    }
  }
  LatticeDataset d;
  d.lattice = PointSet(nodes);

  const auto nz = static_cast<std::size_t>(
      rng.integer(static_cast<std::int64_t>(o.nonzero_min), static_cast<std::int64_t>(o.nonzero_max)));
  d.true_alpha = Vector::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t j : rng.sample_without_replacement(total, nz)) {
    d.true_alpha(static_cast<Eigen::Index>(j)) = o.coef_std * rng.normal();
  }

  // Only nodes with non-zero weight contribute, so evaluate against those.
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < total; ++j) {
    if (d.true_alpha(static_cast<Eigen::Index>(j)) != 0.0) active.push_back(j);
  }
  Vector weights(static_cast<Eigen::Index>(active.size()));
  for (std::size_t a = 0; a < active.size(); ++a) {
    weights(static_cast<Eigen::Index>(a)) = d.true_alpha(static_cast<Eigen::Index>(active[a]));
  }
  const Vector f = cross_gram(d.lattice, d.lattice.select(active), KernelParams{o.sigma}) * weights;

  std::vector<std::size_t> tr, va;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      if (r % 2 == 0 && c % 2 == 0) tr.push_back(r * m + c);
      if (r % 2 == 1 && c % 2 == 1) va.push_back(r * m + c);
    }
  }
  auto take = [&](const std::vector<std::size_t>& idx) {
    Vector v(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) v(static_cast<Eigen::Index>(i)) = f(static_cast<Eigen::Index>(idx[i]));
    return v;
  };
  auto& s = d.split;
  s.train_truth = take(tr);
  s.validation_truth = take(va);
  s.train = Dataset{d.lattice.select(tr), s.train_truth};
  s.validation = Dataset{d.lattice.select(va), s.validation_truth};
  return d;
}

SupportInstance make_support_geometry(const SupportOptions& o) {
  if (o.n < 2) throw ArgumentError("support instance needs at least two points");
  std::vector<double> xs(o.n);
  for (std::size_t i = 0; i < o.n; ++i) xs[i] = static_cast<double>(i) / static_cast<double>(o.n - 1);
  SupportInstance s;
  s.points = PointSet::from_scalars(xs);
  s.gram = std::make_shared<const Matrix>(gram_matrix(s.points, KernelParams{o.sigma}));
  s.true_theta = Vector::Zero(static_cast<Eigen::Index>(o.n + 1));
  s.truth = Vector::Zero(static_cast<Eigen::Index>(o.n));
  return s;
}

SupportInstance draw_support_instance(const SupportInstance& geometry, SeededRng& rng,
                                      const SupportOptions& o) {
  const std::size_t n = geometry.points.count();
  if (o.nonzero_min > o.nonzero_max || o.nonzero_max > n) {
    throw ArgumentError("support instance: invalid non-zero count range");
  }
  SupportInstance s = geometry;
  const auto nz = static_cast<std::size_t>(
      rng.integer(static_cast<std::int64_t>(o.nonzero_min), static_cast<std::int64_t>(o.nonzero_max)));
  s.true_theta = Vector::Zero(static_cast<Eigen::Index>(n + 1));
  for (std::size_t j : rng.sample_without_replacement(n, nz)) {
    s.true_theta(static_cast<Eigen::Index>(j)) = o.coef_std * rng.normal();
  }
  s.truth = (*s.gram) * s.true_theta.head(static_cast<Eigen::Index>(n));
  return s;
}

std::string dataset_csv(const PointSet& points, const Vector& observations, const Vector& truth,
                        const std::vector<std::size_t>& support) {
  const std::size_t n = points.count();
  if (static_cast<std::size_t>(observations.size()) != n ||
      static_cast<std::size_t>(truth.size()) != n) {
    throw ArgumentError("dataset_csv: column lengths differ");
  }
  std::vector<char> flag(n, 0);
  for (std::size_t j : support) {
    if (j >= n) throw ArgumentError("dataset_csv: support index out of range");
    flag[j] = 1;
  }
  std::ostringstream os;
  for (std::size_t d = 0; d < points.dim(); ++d) os << 'x' << (d + 1) << ',';
  os << "y,truth,is_outlier\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = points.point(i);
    for (Eigen::Index d = 0; d < p.size(); ++d) os << format_number(p(d)) << ',';
    os << format_number(observations(static_cast<Eigen::Index>(i))) << ','
       << format_number(truth(static_cast<Eigen::Index>(i)))
       << ',' << static_cast<int>(flag[i]) << '\n';
  }
  return os.str();
}

}  // namespace kgard
