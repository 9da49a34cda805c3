#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgard/denoise.hpp"
#include "kgard/errors.hpp"
#include "kgard/experiments.hpp"
#include "kgard/format.hpp"
#include "kgard/imageio.hpp"
#include "kgard/noise_lab.hpp"
#include "kgard/solver.hpp"

namespace kgard::cli {

namespace {

std::size_t thread_count(const std::optional<std::size_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("KGARD_THREADS"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ArgumentError(std::string("KGARD_THREADS must be a non-negative integer, got '") + env + "'");
  }
  return 1;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

// Numeric CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  Table t;
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      cells.push_back(cell);
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ArgumentError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(t.header.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        throw ArgumentError(path + ":" + std::to_string(line_no) + ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty() || t.rows.empty()) throw ArgumentError(path + ": no data rows");
  return t;
}

PointSet input_columns(const Table& t, const std::string& path) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (!t.header[c].empty() && t.header[c][0] == 'x') cols.push_back(c);
  }
  if (cols.empty()) throw ArgumentError(path + ": no input columns (names starting with 'x')");
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][cols[c]];
    }
  }
  return PointSet(m);
}

Vector named_column(const Table& t, const std::string& name, const std::string& path) {
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == name) {
      Vector v(static_cast<Eigen::Index>(t.rows.size()));
      for (std::size_t r = 0; r < t.rows.size(); ++r) v(static_cast<Eigen::Index>(r)) = t.rows[r][c];
      return v;
    }
  }
  throw ArgumentError(path + ": missing column '" + name + "'");
}

const std::map<std::string, StopNorm> kStopNorms{{"l2", StopNorm::L2}, {"linf", StopNorm::Linf}};
const std::map<std::string, RegularizerKind> kRegularizers{
    {"coef", RegularizerKind::CoefficientNorm}, {"rkhs", RegularizerKind::RkhsNorm}};

// ---------------------------------------------------------------------------

struct RegressArgs {
  std::string train;
  std::string predict;
  std::string out;
  std::string model_out;
  double kernel_sigma = 0.15;
  double lambda = 0.2;
  double epsilon = 10.0;
  StopNorm stop_norm = StopNorm::L2;
  RegularizerKind regularizer = RegularizerKind::CoefficientNorm;
  std::optional<std::size_t> max_selections;
  bool border_boost = false;
};

void run_regress(const RegressArgs& a, std::ostream& out) {
  const Table train = read_table(a.train);
  Dataset data{input_columns(train, a.train), named_column(train, "y", a.train)};
  KgardConfig config;
  config.lambda = a.lambda;
  config.epsilon = a.epsilon;
  config.stop_norm = a.stop_norm;
  config.regularizer = a.regularizer;
  config.max_selections = a.max_selections;
  if (a.border_boost) config.tikhonov_weights = border_boost_weights(data.size());
  const KernelParams kp{a.kernel_sigma};
  const KgardSolution sol = kgard_fit(data, kp, config);

  PointSet queries = data.inputs;
  if (!a.predict.empty()) queries = input_columns(read_table(a.predict), a.predict);
  const Vector pred = predict(sol, data.inputs, queries, kp);

  out << "selected " << sol.outliers.size() << " outliers, bias " << format_number(sol.bias)
      << (sol.truncated ? " (stopped at max-selections)" : "") << '\n';
  if (!a.out.empty()) {
    std::ostringstream os;
    for (std::size_t d = 0; d < queries.dim(); ++d) os << 'x' << (d + 1) << ',';
    os << "prediction\n";
    for (std::size_t i = 0; i < queries.count(); ++i) {
      const auto p = queries.point(i);
      for (Eigen::Index d = 0; d < p.size(); ++d) os << format_number(p(d)) << ',';
      os << format_number(pred(static_cast<Eigen::Index>(i))) << '\n';
    }
    write_text(a.out, os.str());
  }
  if (!a.model_out.empty()) {
    nlohmann::json j;
    j["alpha"] = std::vector<double>(sol.alpha.data(), sol.alpha.data() + sol.alpha.size());
    j["bias"] = sol.bias;
    nlohmann::json outliers = nlohmann::json::array();
    for (const auto& [idx, v] : sol.outliers) outliers.push_back({{"index", idx}, {"value", v}});
    j["outliers"] = outliers;
    j["iterations"] = sol.iterations;
    j["residual_history"] = sol.residual_history;
    j["objective_history"] = sol.objective_history;
    j["truncated"] = sol.truncated;
    write_text(a.model_out, j.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string protocol = "sinc1d";
  std::optional<double> snr_db;
  std::optional<double> inlier_sigma;
  std::optional<double> stable_alpha;
  double stable_gamma = 1.0;
  double outlier_frac = 0.1;
  std::optional<double> outlier_mag;
  double lambda = 0.2;
  double epsilon = 10.0;
  StopNorm stop_norm = StopNorm::L2;
  std::optional<double> kernel_sigma;
  bool no_border_boost = false;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  std::string out;
  std::string trials_out;
  std::string export_dataset;
  bool no_timing = false;
};

void run_experiment(const ExperimentArgs& a, std::ostream& out) {
  MonteCarloOptions o;
  o.protocol = parse_protocol(a.protocol);
  o.noise.inlier_snr_db = a.snr_db;
  o.noise.inlier_sigma = a.inlier_sigma;
  if (a.stable_alpha) o.noise.stable_params = StableParams{*a.stable_alpha, 0.0, a.stable_gamma, 0.0};
  o.noise.impulse_fraction = a.outlier_frac;
  o.noise.impulse_magnitude = a.outlier_mag.value_or(o.protocol == Protocol::Lattice2d ? 40.0 : 15.0);
  o.config.lambda = a.lambda;
  o.config.epsilon = a.epsilon;
  o.config.stop_norm = a.stop_norm;
  o.kernel_sigma = a.kernel_sigma;
  o.border_boost = !a.no_border_boost;
  o.trials = a.trials;
  o.base_seed = a.seed;
  o.threads = thread_count(a.threads);

  const MonteCarloReport rep = run_monte_carlo(o);
  const std::string table = aggregate_csv(rep, o, !a.no_timing);
  out << table;
  if (!a.out.empty()) write_text(a.out, table);
  if (!a.trials_out.empty()) write_text(a.trials_out, trials_csv(rep, !a.no_timing));

  if (!a.export_dataset.empty()) {
    // First trial's corrupted training set.
    SeededRng rng(a.seed);
    RegressionSplit split;
    if (o.protocol == Protocol::Lattice2d) {
      split = make_lattice_dataset(rng, o.lattice).split;
    } else {
      split = make_sinc_dataset();
    }
    const Corruption c = corrupt(split.train_truth, o.noise, rng);
    write_text(a.export_dataset, dataset_csv(split.train.inputs, c.observations, split.train_truth, c.support));
  }
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::vector<double> magnitudes{100.0, 300.0, 600.0, 900.0};
  double fraction = 0.1;
  std::size_t trials = 200;
  double lambda = 5000.0;
  double epsilon = 50.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  std::string out;
};

void run_sweep(const SweepArgs& a, std::ostream& out) {
  SweepOptions o;
  o.magnitudes = a.magnitudes;
  o.fraction = a.fraction;
  o.trials = a.trials;
  o.lambda = a.lambda;
  o.epsilon = a.epsilon;
  o.base_seed = a.seed;
  o.threads = thread_count(a.threads);
  const std::string csv = sweep_csv(sweep_outlier_magnitude(o));
  out << csv;
  if (!a.out.empty()) write_text(a.out, csv);
}

// ---------------------------------------------------------------------------

struct CorruptImageArgs {
  std::string in;
  std::string out;
  std::string mask;
  std::optional<double> snr_db;
  double impulse_frac = 0.05;
  double impulse_mag = 100.0;
  std::uint64_t seed = 0;
};

void run_corrupt_image(const CorruptImageArgs& a, std::ostream& out) {
  const GrayImage img = load_pgm(a.in);
  NoiseSpec spec;
  spec.inlier_snr_db = a.snr_db;
  spec.impulse_fraction = a.impulse_frac;
  spec.impulse_magnitude = a.impulse_mag;
  spec.seed = a.seed;
  const Vector truth = Eigen::Map<const Vector>(img.pixels().data(), static_cast<Eigen::Index>(img.size()));
  const Corruption c = corrupt(truth, spec);
  GrayImage noisy(img.width(), img.height(),
                  std::vector<double>(c.observations.data(), c.observations.data() + c.observations.size()));
  save_pgm(a.out, noisy);
  if (!a.mask.empty()) {
    GrayImage m(img.width(), img.height());
    for (std::size_t j : c.support) m.pixels()[j] = 255.0;
    save_pgm(a.mask, m);
  }
  out << "corrupted " << c.support.size() << " of " << img.size() << " pixels with impulses\n";
}

// ---------------------------------------------------------------------------

struct DenoiseArgs {
  std::string in;
  std::string out;
  std::string outliers;
  std::string impulse_removed;
  std::string diagnostics;
  std::string reference;
  RoiConfig cfg;
  std::string stop_rule = "gated";
  std::optional<std::size_t> threads;
};

void run_denoise(const DenoiseArgs& a, std::ostream& out) {
  const GrayImage img = load_pgm(a.in);
  DenoiseOptions opt;
  opt.threads = thread_count(a.threads);
  opt.stop_rule = parse_stop_rule(a.stop_rule);
  a.cfg.validate();
  const DenoiseResult res = denoise_image(img, a.cfg, opt);
  save_pgm(a.out, res.denoised);
  if (!a.outliers.empty()) {
    // Signed map shifted to mid-gray so that 128 means "no outlier".
    GrayImage shifted = res.outlier_map;
    for (double& v : shifted.pixels()) v += 128.0;
    save_pgm(a.outliers, shifted);
  }
  if (!a.impulse_removed.empty()) save_pgm(a.impulse_removed, res.impulse_removed);
  if (!a.diagnostics.empty()) write_text(a.diagnostics, diagnostics_json(res, a.cfg));

  std::size_t count = 0;
  for (double v : res.outlier_map.pixels()) count += v != 0.0 ? 1 : 0;
  out << "rois " << res.rois.size() << ", outlier pixels " << count << ", failed rois "
      << res.failed_rois.size() << '\n';
  if (!a.reference.empty()) {
    const GrayImage ref = load_pgm(a.reference);
    out << "psnr " << format_number(psnr(res.denoised, ref)) << '\n';
  }
}

// ---------------------------------------------------------------------------

void run_psnr(const std::string& pa, const std::string& pb, std::ostream& out) {
  const double v = psnr(load_pgm(pa), load_pgm(pb));
  if (std::isinf(v)) {
    out << "inf\n";
  } else {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    out << os.str() << '\n';
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Greedy robust kernel ridge regression: fitting, experiments and image denoising"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // regress
  RegressArgs ra;
  auto* regress = app.add_subcommand("regress", "Fit a robust kernel regression to a CSV data set");
  regress->add_option("--train", ra.train, "CSV with x1..xd and y columns")->required()->check(CLI::ExistingFile);
  regress->add_option("--predict", ra.predict, "CSV with x1..xd columns to evaluate (default: training inputs)")
      ->check(CLI::ExistingFile);
  regress->add_option("--out", ra.out, "Write predictions as CSV");
  regress->add_option("--model-out", ra.model_out, "Write coefficients and outliers as JSON");
  regress->add_option("--kernel-sigma", ra.kernel_sigma, "Gaussian kernel width")->capture_default_str()
      ->check(CLI::PositiveNumber);
  regress->add_option("--lambda", ra.lambda, "Ridge parameter")->capture_default_str()->check(CLI::PositiveNumber);
  regress->add_option("--epsilon", ra.epsilon, "Residual threshold")->capture_default_str()->check(CLI::NonNegativeNumber);
  regress->add_option("--stop-norm", ra.stop_norm, "Residual norm for the stopping test (l2|linf)")
      ->transform(CLI::CheckedTransformer(kStopNorms, CLI::ignore_case))
      ->default_str("l2");
  regress->add_option("--regularizer", ra.regularizer, "Penalty on the kernel expansion (coef|rkhs)")
      ->transform(CLI::CheckedTransformer(kRegularizers, CLI::ignore_case))
      ->default_str("coef");
  regress->add_option("--max-selections", ra.max_selections, "Outlier cap (default: floor(N/2))");
  regress->add_flag("--border-boost", ra.border_boost, "Five-fold penalty on the first and last five coefficients");

  // experiment
  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo validation MSE and support recovery");
  experiment->add_option("--protocol", ea.protocol, "sinc1d | lattice2d | stable1d")->capture_default_str()
      ->check(CLI::IsMember({"sinc1d", "lattice2d", "stable1d"}));
  auto* snr = experiment->add_option("--snr-db", ea.snr_db, "Gaussian inlier SNR in dB");
  auto* isig = experiment->add_option("--inlier-sigma", ea.inlier_sigma, "Gaussian inlier standard deviation");
  auto* salpha = experiment->add_option("--stable-alpha", ea.stable_alpha, "Alpha-stable characteristic exponent in (0,2]");
  snr->excludes(isig)->excludes(salpha);
  isig->excludes(salpha);
  experiment->add_option("--stable-gamma", ea.stable_gamma, "Alpha-stable scale")->capture_default_str();
  experiment->add_option("--outlier-frac", ea.outlier_frac, "Fraction of impulse-corrupted samples")->capture_default_str();
  experiment->add_option("--outlier-mag", ea.outlier_mag, "Impulse magnitude (default: 15, or 40 for lattice2d)");
  experiment->add_option("--lambda", ea.lambda, "Ridge parameter")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--epsilon", ea.epsilon, "Residual threshold")->capture_default_str();
  experiment->add_option("--stop-norm", ea.stop_norm, "l2 | linf")
      ->transform(CLI::CheckedTransformer(kStopNorms, CLI::ignore_case))
      ->default_str("l2");
  experiment->add_option("--kernel-sigma", ea.kernel_sigma, "Fitting kernel width (default: 0.15, or 0.2 for lattice2d)");
  experiment->add_flag("--no-border-boost", ea.no_border_boost, "Disable the border penalty boost of the 1-D protocols");
  experiment->add_option("--trials", ea.trials, "Monte-Carlo runs")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--seed", ea.seed, "Base seed; trial t uses seed + t")->capture_default_str();
  experiment->add_option("--threads", ea.threads, "Worker threads, 0 = all cores (default: $KGARD_THREADS or 1)");
  experiment->add_option("--out", ea.out, "Write the aggregate table as CSV");
  experiment->add_option("--trials-out", ea.trials_out, "Write one CSV row per trial");
  experiment->add_option("--export-dataset", ea.export_dataset, "Write the first trial's corrupted training set as CSV");
  experiment->add_flag("--no-timing", ea.no_timing, "Write 0 for all timings (byte-reproducible output)");

  // sweep
  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Outlier-magnitude sweep of support recovery and the identification bound");
  sweep->add_option("--magnitudes", sa.magnitudes, "Impulse magnitudes")->capture_default_str()->delimiter(',');
  sweep->add_option("--fraction", sa.fraction, "Outlier fraction")->capture_default_str();
  sweep->add_option("--trials", sa.trials, "Runs per magnitude")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--lambda", sa.lambda, "Ridge parameter")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--epsilon", sa.epsilon, "Residual threshold (l2)")->capture_default_str();
  sweep->add_option("--seed", sa.seed, "Base seed")->capture_default_str();
  sweep->add_option("--threads", sa.threads, "Worker threads (default: $KGARD_THREADS or 1)");
  sweep->add_option("--out", sa.out, "Write the sweep table as CSV");

  // corrupt-image
  CorruptImageArgs ca;
  auto* corrupt_cmd = app.add_subcommand("corrupt-image", "Add Gaussian noise and impulses to a PGM image");
  corrupt_cmd->add_option("--in", ca.in, "Input PGM")->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--out", ca.out, "Output PGM")->required();
  corrupt_cmd->add_option("--mask", ca.mask, "Write the impulse locations as a 0/255 PGM");
  corrupt_cmd->add_option("--snr-db", ca.snr_db, "Gaussian SNR in dB (default: none)");
  corrupt_cmd->add_option("--impulse-frac", ca.impulse_frac, "Fraction of impulse pixels")->capture_default_str();
  corrupt_cmd->add_option("--impulse-mag", ca.impulse_mag, "Impulse magnitude")->capture_default_str();
  corrupt_cmd->add_option("--seed", ca.seed, "Random seed")->capture_default_str();

  // denoise
  DenoiseArgs da;
  auto* denoise = app.add_subcommand("denoise", "ROI-tiled robust denoising of a PGM image");
  denoise->add_option("--in", da.in, "Noisy PGM")->required()->check(CLI::ExistingFile);
  denoise->add_option("--out", da.out, "Denoised PGM")->required();
  denoise->add_option("--outliers", da.outliers, "Outlier map PGM, offset by 128");
  denoise->add_option("--impulse-removed", da.impulse_removed, "Input minus the outlier map, as PGM");
  denoise->add_option("--diagnostics", da.diagnostics, "Per-ROI diagnostics as JSON");
  denoise->add_option("--reference", da.reference, "Clean PGM; prints PSNR of the result against it")
      ->check(CLI::ExistingFile);
  denoise->add_option("--sigma", da.cfg.sigma, "Kernel width on the ROI lattice")->capture_default_str();
  denoise->add_option("--lambda0", da.cfg.lambda0, "Base ridge parameter")->capture_default_str();
  denoise->add_option("--e0", da.cfg.e0, "Upper residual threshold E0")->capture_default_str();
  denoise->add_option("--roi", da.cfg.roi_size, "ROI size N")->capture_default_str();
  denoise->add_option("--core", da.cfg.core_size, "Core size L")->capture_default_str();
  denoise->add_option("--stop-rule", da.stop_rule, "gated | literal | fixed")->capture_default_str()
      ->check(CLI::IsMember({"gated", "literal", "fixed"}));
  denoise->add_option("--threads", da.threads, "Worker threads (default: $KGARD_THREADS or 1)");

  // psnr
  std::string pa, pb;
  auto* psnr_cmd = app.add_subcommand("psnr", "PSNR between two PGM images");
  psnr_cmd->add_option("--a", pa, "First PGM")->required()->check(CLI::ExistingFile);
  psnr_cmd->add_option("--b", pb, "Second PGM")->required()->check(CLI::ExistingFile);

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.emplace_back("kgard");
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: argument: " << e.what() << '\n';
    return 2;
  }

  try {
    if (regress->parsed()) run_regress(ra, out);
    if (experiment->parsed()) run_experiment(ea, out);
    if (sweep->parsed()) run_sweep(sa, out);
    if (corrupt_cmd->parsed()) run_corrupt_image(ca, out);
    if (denoise->parsed()) run_denoise(da, out);
    if (psnr_cmd->parsed()) run_psnr(pa, pb, out);
  } catch (const ArgumentError& e) {
    err << "error: argument: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "error: format: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "error: numerical: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: runtime: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace kgard::cli
