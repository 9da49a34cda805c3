#include "kgard/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>

#include "kgard/errors.hpp"
#include "kgard/format.hpp"
#include "kgard/parallel.hpp"
#include "kgard/theory.hpp"

namespace kgard {

SupportMetrics support_metrics(std::span<const std::size_t> estimated,
                               std::span<const std::size_t> truth) {
  if (truth.empty()) throw ArgumentError("support_metrics: true support is empty");
  std::vector<std::size_t> t(truth.begin(), truth.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  std::vector<std::size_t> s(estimated.begin(), estimated.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::size_t hit = 0;
  for (std::size_t j : s) hit += std::binary_search(t.begin(), t.end(), j) ? 1 : 0;
  const auto denom = static_cast<double>(t.size());
  return {static_cast<double>(hit) / denom, static_cast<double>(s.size() - hit) / denom};
}

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Sinc1d: return "sinc1d";
    case Protocol::Lattice2d: return "lattice2d";
    case Protocol::Stable1d: return "stable1d";
  }
  return "unknown";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "sinc1d") return Protocol::Sinc1d;
  if (name == "lattice2d") return Protocol::Lattice2d;
  if (name == "stable1d") return Protocol::Stable1d;
  throw ArgumentError("unknown protocol '" + name + "' (expected sinc1d, lattice2d or stable1d)");
}

Vector border_boost_weights(std::size_t n, std::size_t width, double factor) {
  Vector w = Vector::Ones(static_cast<Eigen::Index>(n + 1));
  const double s = std::sqrt(factor);
  const std::size_t k = std::min(width, n);
  for (std::size_t i = 0; i < k; ++i) {
    w(static_cast<Eigen::Index>(i)) = s;
    w(static_cast<Eigen::Index>(n - 1 - i)) = s;
  }
  return w;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Geometry shared by all trials of a protocol: the fitting model and the
// validation evaluation matrix.
struct ProtocolSetup {
  std::shared_ptr<const KgardModel> model;
  Matrix validation_eval;
  RegressionSplit sinc;  // 1-D protocols only
};

ProtocolSetup prepare(const MonteCarloOptions& o) {
  ProtocolSetup s;
  KgardConfig config = o.config;
  PointSet train;
  PointSet validation;
  if (o.protocol == Protocol::Lattice2d) {
    // The train/validation nodes do not depend on the draw.
    SeededRng probe(o.base_seed);
    const LatticeDataset d = make_lattice_dataset(probe, o.lattice);
    train = d.split.train.inputs;
    validation = d.split.validation.inputs;
  } else {
    s.sinc = make_sinc_dataset();
    train = s.sinc.train.inputs;
    validation = s.sinc.validation.inputs;
    if (o.border_boost && !config.tikhonov_weights) {
      config.tikhonov_weights = border_boost_weights(train.count());
    }
  }
  const double default_sigma = o.protocol == Protocol::Lattice2d ? 0.2 : 0.15;
  const KernelParams kp{o.kernel_sigma.value_or(default_sigma)};
  kp.validate();
  s.model = std::make_shared<const KgardModel>(
      std::make_shared<const Matrix>(gram_matrix(train, kp)), config);
  s.validation_eval = cross_gram(validation, train, kp);
  return s;
}

TrialResult run_trial(const MonteCarloOptions& o, const ProtocolSetup& setup, std::size_t t) {
  TrialResult res;
  res.seed = o.base_seed + t;
  SeededRng rng(res.seed);
  try {
    Vector train_truth, validation_truth;
    if (o.protocol == Protocol::Lattice2d) {
      const LatticeDataset d = make_lattice_dataset(rng, o.lattice);
      train_truth = d.split.train_truth;
      validation_truth = d.split.validation_truth;
    } else {
      train_truth = setup.sinc.train_truth;
      validation_truth = setup.sinc.validation_truth;
    }
    const Corruption c = corrupt(train_truth, o.noise, rng);

    const auto start = std::chrono::steady_clock::now();
    const KgardSolution sol = setup.model->fit(c.observations);
    res.wall_time_seconds = seconds_since(start);

    const Vector pred = setup.validation_eval * sol.alpha +
                        Vector::Constant(setup.validation_eval.rows(), sol.bias);
    res.mse_validation = (pred - validation_truth).squaredNorm() / static_cast<double>(pred.size());
    res.selections = sol.outliers.size();
    if (!c.support.empty()) {
      const auto est = sol.support();
      res.support = support_metrics(est, c.support);
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

}  // namespace

MonteCarloReport run_monte_carlo(const MonteCarloOptions& o) {
  if (o.trials == 0) throw ArgumentError("trials must be at least 1");
  o.noise.validate();
  if (o.protocol == Protocol::Stable1d && !o.noise.stable_params) {
    throw ArgumentError("stable1d needs alpha-stable noise parameters");
  }
  const ProtocolSetup setup = prepare(o);

  MonteCarloReport rep;
  rep.trials.resize(o.trials);
  parallel_for(o.trials, o.threads, [&](std::size_t t) { rep.trials[t] = run_trial(o, setup, t); });

  AggregateStats& a = rep.aggregate;
  double sum_sq = 0.0;
  for (const auto& t : rep.trials) {
    if (t.failed) {
      ++a.failures;
      continue;
    }
    ++a.trials;
    a.mean_mse += t.mse_validation;
    sum_sq += t.mse_validation * t.mse_validation;
    a.mean_time += t.wall_time_seconds;
    if (t.support) {
      ++a.support_trials;
      a.mean_correct += t.support->correct;
      a.mean_wrong += t.support->wrong;
    }
  }
  if (a.trials > 0) {
    const auto n = static_cast<double>(a.trials);
    a.mean_mse /= n;
    a.mean_time /= n;
    a.std_mse = a.trials > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * a.mean_mse * a.mean_mse) / (n - 1.0)))
                             : 0.0;
  }
  if (a.support_trials > 0) {
    a.mean_correct /= static_cast<double>(a.support_trials);
    a.mean_wrong /= static_cast<double>(a.support_trials);
  }
  return rep;
}

namespace {

std::ostringstream csv_stream() { return std::ostringstream(); }

std::string num(double v) { return format_number(v); }

}  // namespace

std::string trials_csv(const MonteCarloReport& report, bool timing) {
  auto os = csv_stream();
  os << "seed,mse,correct,wrong,seconds,failed\n";
  for (const auto& t : report.trials) {
    os << t.seed << ',';
    if (t.failed) {
      os << ",,,";
    } else {
      os << num(t.mse_validation) << ',';
      if (t.support) {
        os << num(t.support->correct) << ',' << num(t.support->wrong) << ',';
      } else {
        os << "NA,NA,";
      }
    }
    os << num(timing ? t.wall_time_seconds : 0.0) << ',' << (t.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string aggregate_csv(const MonteCarloReport& report, const MonteCarloOptions& o, bool timing) {
  auto os = csv_stream();
  const auto& a = report.aggregate;
  std::string noise = "none";
  if (o.noise.inlier_snr_db) {
    noise = num(*o.noise.inlier_snr_db) + "dB";
  } else if (o.noise.inlier_sigma) {
    noise = "sigma=" + num(*o.noise.inlier_sigma);
  } else if (o.noise.stable_params) {
    noise = "stable(alpha=" + num(o.noise.stable_params->alpha) +
            ";gamma=" + num(o.noise.stable_params->gamma_scale) + ")";
  }
  os << "protocol,noise,outlier_fraction,lambda,epsilon,trials,failures,mse,mse_std,"
        "correct_pct,wrong_pct,mit_seconds\n";
  os << protocol_name(o.protocol) << ',' << noise << ',' << num(o.noise.impulse_fraction) << ','
     << num(o.config.lambda) << ',' << num(o.config.epsilon) << ',' << a.trials << ',' << a.failures
     << ',' << num(a.mean_mse) << ',' << num(a.std_mse) << ',';
  if (a.support_trials > 0) {
    os << num(100.0 * a.mean_correct) << ',' << num(100.0 * a.mean_wrong) << ',';
  } else {
    os << "NA,NA,";
  }
  os << num(timing ? a.mean_time : 0.0) << '\n';
  return os.str();
}

std::vector<SweepRow> sweep_outlier_magnitude(const SweepOptions& o) {
  if (o.magnitudes.empty()) throw ArgumentError("sweep: no magnitudes given");
  if (o.trials == 0) throw ArgumentError("trials must be at least 1");
  const SupportInstance geometry = make_support_geometry(o.instance);
  const double sigma_max = design_sigma_max(*geometry.gram);
  KgardConfig config;
  config.lambda = o.lambda;
  config.epsilon = o.epsilon;
  const KgardModel model(geometry.gram, config);

  struct Outcome {
    SupportMetrics metrics;
    bool holds = false;
    bool failed = false;
  };

  std::vector<SweepRow> rows;
  for (double magnitude : o.magnitudes) {
    NoiseSpec noise;
    noise.impulse_fraction = o.fraction;
    noise.impulse_magnitude = magnitude;
    noise.validate();
    std::vector<Outcome> out(o.trials);
    parallel_for(o.trials, o.threads, [&](std::size_t t) {
      SeededRng rng(o.base_seed + t);
      Outcome& r = out[t];
      try {
        const SupportInstance inst = draw_support_instance(geometry, rng, o.instance);
        const Corruption c = corrupt(inst.truth, noise, rng);
        if (c.support.empty()) throw ArgumentError("sweep: the outlier fraction yields no impulses");
        if (magnitude > 0.0) {
          r.holds = theorem_check(sigma_max, inst.true_theta, c.outliers, o.lambda).holds;
        }
        const KgardSolution sol = model.fit(c.observations);
        const auto est = sol.support();
        r.metrics = support_metrics(est, c.support);
      } catch (const std::exception&) {
        r.failed = true;
      }
    });
    SweepRow row;
    row.magnitude = magnitude;
    for (const auto& r : out) {
      if (r.failed) {
        ++row.failures;
        continue;
      }
      ++row.trials;
      row.mean_correct += r.metrics.correct;
      row.mean_wrong += r.metrics.wrong;
      row.bound_hold_rate += r.holds ? 1.0 : 0.0;
    }
    if (row.trials > 0) {
      const auto n = static_cast<double>(row.trials);
      row.mean_correct /= n;
      row.mean_wrong /= n;
      row.bound_hold_rate /= n;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  auto os = csv_stream();
  os << "magnitude,mean_correct,mean_wrong,bound_hold_rate,trials,failures\n";
  for (const auto& r : rows) {
    os << num(r.magnitude) << ',' << num(r.mean_correct) << ',' << num(r.mean_wrong) << ','
       << num(r.bound_hold_rate) << ',' << r.trials << ',' << r.failures << '\n';
  }
  return os.str();
}

}  // namespace kgard
