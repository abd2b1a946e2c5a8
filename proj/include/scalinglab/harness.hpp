#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scalinglab/config.hpp"
#include "scalinglab/csv.hpp"
#include "scalinglab/detail/parallel.hpp"
#include "scalinglab/feature_maps.hpp"
#include "scalinglab/ridge_regression.hpp"
#include "scalinglab/rmt_theory.hpp"
#include "scalinglab/spectral_analysis.hpp"
#include "scalinglab/synthetic_data.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

// Orchestration: one seeded run of the full pipeline (data -> features ->
// ridge solve -> test loss), sweeps over a single axis with theory columns,
// CSV emission with a manifest, and simulation/theory comparison.

class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_name(stage) {}
  std::string stage_name;
};

namespace detail {

template <typename Fn>
auto pipeline_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

struct PreparedFeatures {
  Matrix phi;      // N x T
  Matrix phi_hat;  // N x T_hat
};

inline PreparedFeatures build_features(const ExperimentConfig& cfg, const Matrix& x,
                                       const Matrix& x_hat, std::uint64_t seed) {
  PreparedFeatures out;
  if (cfg.feature_map == FeatureMapKind::LinearLatent) {
    FeatureWeights u =
        cfg.identity_features
            ? identity_feature_weights(cfg.N)
            : sample_feature_weights(cfg.N, cfg.M, cfg.resolved_sigma_u_sq(),
                                     substream_seed(seed, Stream::FeatureWeights));
    out.phi = linear_features(u, x).phi;
    out.phi_hat = linear_features(u, x_hat).phi;
    return out;
  }
  // Latents live in a larger space than the nonlinear map's input; project
  // them down with a fixed random map before the ReLU layer.
  RandomEngine proj_engine(substream_seed(seed, Stream::InputProjection));
  const Matrix projection = gaussian_matrix(proj_engine, cfg.n_in, cfg.M,
                                            std::sqrt(1.0 / static_cast<double>(cfg.M)));
  const Matrix x_in = projection * x;
  const Matrix x_in_hat = projection * x_hat;
  FeatureWeights u =
      sample_feature_weights(cfg.N, cfg.n_in, cfg.resolved_sigma_u_sq(),
                             substream_seed(seed, Stream::FeatureWeights));
  out.phi = relu_features(u, x_in).phi;
  out.phi_hat = relu_features(u, x_in_hat).phi;
  return out;
}

// One factorization serves both the full targets and the noise-only targets,
// so the measured loss can be split into label and noise contributions.
struct SolveOutcome {
  Matrix theta;      // C x N, for y + eps targets
  Matrix theta_eps;  // C x N, for eps-only targets (empty when noiseless)
  double gamma = 0.0;
  double gamma_requested = 0.0;
  bool floored = false;
  SolveMethod method = SolveMethod::Primal;
};

inline SolveOutcome solve_with_gram(const Matrix& gram, bool primal, const Matrix& phi,
                                    const Matrix& targets, const Matrix* noise,
                                    double gamma) {
  auto factor = scalinglab::detail::factor_ridge_system(gram, gamma);
  SolveOutcome out;
  out.gamma = factor.gamma;
  out.gamma_requested = gamma;
  out.floored = factor.floored;
  out.method = primal ? SolveMethod::Primal : SolveMethod::Dual;
  const Index c = targets.rows();
  Matrix stacked;
  if (noise) {
    stacked.resize(2 * c, targets.cols());
    stacked.topRows(c) = targets;
    stacked.bottomRows(c) = *noise;
  } else {
    stacked = targets;
  }
  if (primal) {
    Matrix solved = factor.solve(phi * stacked.transpose());  // N x (C or 2C)
    out.theta = solved.leftCols(c).transpose();
    if (noise) out.theta_eps = solved.rightCols(c).transpose();
  } else {
    Matrix solved = phi * factor.solve(stacked.transpose());  // N x (C or 2C)
    out.theta = solved.leftCols(c).transpose();
    if (noise) out.theta_eps = solved.rightCols(c).transpose();
  }
  return out;
}

}  // namespace detail

/// Samples one dataset, builds features, solves the regression (primal when
/// N < T, dual otherwise) and measures train/test losses.  Pure in
/// (config, seed).
inline LossRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Spectrum spectrum = cfg.make_spectrum();

  Matrix x, x_hat;
  detail::pipeline_stage("sample_latents", [&] {
    x = sample_latents(spectrum, cfg.T, substream_seed(seed, Stream::TrainLatents));
    x_hat = sample_latents(spectrum, cfg.T_hat, substream_seed(seed, Stream::TestLatents));
    return 0;
  });

  Matrix y, y_hat;
  detail::pipeline_stage("teacher", [&] {
    const TeacherWeights teacher =
        sample_teacher(cfg.M, cfg.C, cfg.sigma_w_sq, substream_seed(seed, Stream::Teacher));
    y = make_labels(teacher, x);
    y_hat = make_labels(teacher, x_hat);  // test labels are noise-free
    return 0;
  });

  detail::PreparedFeatures features;
  detail::pipeline_stage("features",
                         [&] { features = detail::build_features(cfg, x, x_hat, seed); return 0; });

  Matrix noise;
  const bool has_noise = cfg.sigma_eps_sq > 0.0;
  if (has_noise) {
    detail::pipeline_stage("noise", [&] {
      noise = sample_noise(cfg.C, cfg.T, NoiseModel{cfg.sigma_eps_sq},
                           substream_seed(seed, Stream::TrainNoise));
      return 0;
    });
  }
  const Matrix targets = has_noise ? Matrix(y + noise) : y;

  return detail::pipeline_stage("solve", [&]() -> LossRecord {
    const bool primal = cfg.N < cfg.T;
    const Index side = primal ? cfg.N : cfg.T;
    Matrix gram = Matrix::Zero(side, side);
    if (primal)
      gram.selfadjointView<Eigen::Lower>().rankUpdate(features.phi);
    else
      gram.selfadjointView<Eigen::Lower>().rankUpdate(features.phi.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    auto evaluate = [&](double gamma) -> LossRecord {
      const detail::SolveOutcome sol = detail::solve_with_gram(
          gram, primal, features.phi, targets, has_noise ? &noise : nullptr, gamma);
      LossRecord rec;
      const Matrix z_hat = sol.theta * features.phi_hat;
      rec.test_loss = test_loss(z_hat, y_hat);
      rec.train_loss = train_loss(sol.theta, features.phi, targets, sol.gamma);
      if (has_noise) {
        const Matrix z_eps = sol.theta_eps * features.phi_hat;
        rec.noise_term = 0.5 * z_eps.squaredNorm() / static_cast<double>(cfg.T_hat);
        rec.label_term = test_loss(z_hat - z_eps, y_hat);
      } else {
        rec.label_term = rec.test_loss;
        rec.noise_term = 0.0;
      }
      rec.gamma = sol.gamma;
      rec.gamma_requested = sol.gamma_requested;
      rec.gamma_floored = sol.floored;
      rec.method = sol.method;
      return rec;
    };

    LossRecord rec;
    if (cfg.gamma_mode == GammaMode::Optimize) {
      const double scale = features.phi.squaredNorm() / static_cast<double>(cfg.N);
      const auto search =
          optimal_ridge(evaluate, default_gamma_grid(scale, cfg.ridge_grid_points));
      rec = search.record;
    } else {
      const double gamma =
          cfg.gamma_mode == GammaMode::Fixed ? cfg.gamma_value : 0.0;
      rec = evaluate(gamma);
    }
    rec.config_digest = cfg.digest();
    rec.seed = seed;
    rec.n_features = cfg.N;
    rec.n_train = cfg.T;
    rec.n_latent = cfg.M;
    const double scale_max = static_cast<double>(std::max(cfg.N, cfg.T));
    rec.near_pole = std::abs(cfg.N - cfg.T) / scale_max < 0.05;
    return rec;
  });
}

enum class SweepAxis { T, N, M, Alpha, Gamma };

inline const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::T: return "T";
    case SweepAxis::N: return "N";
    case SweepAxis::M: return "M";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Gamma: return "gamma";
  }
  return "?";
}

inline SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "T") return SweepAxis::T;
  if (name == "N") return SweepAxis::N;
  if (name == "M") return SweepAxis::M;
  if (name == "alpha") return SweepAxis::Alpha;
  if (name == "gamma") return SweepAxis::Gamma;
  throw DomainError("unknown sweep axis '" + name + "'");
}

inline ExperimentConfig apply_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                         double value) {
  ExperimentConfig cfg = base;
  switch (axis) {
    case SweepAxis::T: cfg.T = static_cast<int>(std::llround(value)); break;
    case SweepAxis::N: cfg.N = static_cast<int>(std::llround(value)); break;
    case SweepAxis::M: cfg.M = static_cast<int>(std::llround(value)); break;
    case SweepAxis::Alpha: cfg.alpha = value; break;
    case SweepAxis::Gamma:
      cfg.gamma_mode = GammaMode::Fixed;
      cfg.gamma_value = value;
      break;
  }
  return cfg;
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::T;
  std::vector<double> values;
  ExperimentConfig base;
  bool with_theory = true;

  void validate() const {
    require_domain(!values.empty(), "sweep: values must be non-empty");
    for (std::size_t i = 1; i < values.size(); ++i)
      require_domain(values[i] > values[i - 1],
                     "sweep: values must be strictly increasing");
  }
};

/// Analytic prediction matching a config, when one exists: the plain linear
/// model formulas when features are the identity, otherwise the
/// random-feature label term plus the projected-spectrum noise term.
/// Returns +inf at poles and nullopt when no closed form applies.
inline std::optional<double> theory_loss_for(const ExperimentConfig& cfg) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  try {
    if (cfg.identity_features) {
      if (cfg.spectrum_kind == SpectrumKind::Isotropic)
        return mp_linear_loss(cfg.N, cfg.T, cfg.sigma_x_sq, cfg.sigma_w_sq,
                              cfg.sigma_eps_sq);
      return pl_linear_loss(cfg.N, cfg.T, cfg.alpha, cfg.lambda_max, cfg.sigma_w_sq,
                            cfg.sigma_eps_sq);
    }
    const TheoryLoss label = label_loss(cfg.T, cfg.N, cfg.make_spectrum(), cfg.sigma_w_sq);
    if (label.pole) return inf;
    double noise = 0.0;
    if (cfg.sigma_eps_sq > 0.0) {
      if (cfg.spectrum_kind != SpectrumKind::PowerLaw) return std::nullopt;
      noise = noise_loss(cfg.T, cfg.N, cfg.M, cfg.alpha, cfg.sigma_eps_sq);
    }
    return label.total + noise;
  } catch (const PoleError&) {
    return inf;
  }
}

struct SweepRow {
  double value = 0.0;
  long long seed = -1;  // -1 marks an aggregate row
  LossRecord rec;
  double theory_loss = std::numeric_limits<double>::quiet_NaN();
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  bool aggregate = false;
  double stderr_loss = std::numeric_limits<double>::quiet_NaN();
  int n_seeds = 0;
  bool failed = false;
  std::string error;
};

struct SweepTable {
  std::string axis;
  std::vector<SweepRow> rows;
  ExperimentConfig base;
  std::string started, finished;  // UTC timestamps, manifest only
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline double relative_or_absolute_error(double measured, double reference) {
  if (reference == 0.0) return std::abs(measured);  // absolute fallback
  return std::abs(measured - reference) / std::abs(reference);
}

}  // namespace detail

/// One row per (axis value, seed), plus an aggregate row (seed = -1) with the
/// seed mean per value.  Theory columns are evaluated once per axis value.
/// Per-row failures are recorded and the sweep continues.
inline SweepTable run_sweep(const SweepSpec& spec, int threads = default_thread_count()) {
  spec.validate();
  SweepTable table;
  table.axis = sweep_axis_name(spec.axis);
  table.base = spec.base;
  table.started = detail::utc_timestamp();

  struct Task {
    std::size_t value_index;
    double value;
    std::uint64_t seed;
    ExperimentConfig cfg;
  };
  std::vector<Task> tasks;
  std::vector<double> theory(spec.values.size(),
                             std::numeric_limits<double>::quiet_NaN());
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    ExperimentConfig cfg = apply_axis_value(spec.base, spec.axis, spec.values[vi]);
    cfg.validate();
    if (spec.with_theory) {
      if (auto th = theory_loss_for(cfg)) theory[vi] = *th;
    }
    for (std::uint64_t s : cfg.effective_seeds())
      tasks.push_back({vi, spec.values[vi], s, cfg});
  }

  std::vector<SweepRow> raw(tasks.size());
  detail::parallel_for(static_cast<int>(tasks.size()), threads, [&](int i) {
    const Task& task = tasks[static_cast<std::size_t>(i)];
    SweepRow row;
    row.value = task.value;
    row.seed = static_cast<long long>(task.seed);
    row.theory_loss = theory[task.value_index];
    try {
      row.rec = run_single(task.cfg, task.seed);
      if (std::isfinite(row.theory_loss))
        row.rel_err = detail::relative_or_absolute_error(row.rec.test_loss, row.theory_loss);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      row.rec.test_loss = std::numeric_limits<double>::quiet_NaN();
      row.rec.seed = task.seed;
    }
    raw[static_cast<std::size_t>(i)] = row;
  });

  // Rows are already ordered by (axis value, seed) by construction, which
  // keeps parallel and serial execution byte-identical.
  std::size_t cursor = 0;
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    double sum = 0.0, sum_sq = 0.0, sum_train = 0.0, sum_label = 0.0, sum_noise = 0.0;
    int n = 0;
    SweepRow aggregate;
    while (cursor < tasks.size() && tasks[cursor].value_index == vi) {
      const SweepRow& row = raw[cursor];
      table.rows.push_back(row);
      if (!row.failed) {
        sum += row.rec.test_loss;
        sum_sq += row.rec.test_loss * row.rec.test_loss;
        sum_train += row.rec.train_loss;
        sum_label += row.rec.label_term;
        sum_noise += row.rec.noise_term;
        if (n == 0) aggregate.rec = row.rec;
        ++n;
      }
      ++cursor;
    }
    if (n == 0) continue;
    aggregate.aggregate = true;
    aggregate.seed = -1;
    aggregate.value = spec.values[vi];
    aggregate.n_seeds = n;
    aggregate.rec.test_loss = sum / n;
    aggregate.rec.train_loss = sum_train / n;
    aggregate.rec.label_term = sum_label / n;
    aggregate.rec.noise_term = sum_noise / n;
    aggregate.rec.seed = 0;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
      aggregate.stderr_loss = std::sqrt(var / n);
    }
    aggregate.theory_loss = theory[vi];
    if (std::isfinite(aggregate.theory_loss))
      aggregate.rel_err =
          detail::relative_or_absolute_error(aggregate.rec.test_loss, aggregate.theory_loss);
    table.rows.push_back(aggregate);
  }
  table.finished = detail::utc_timestamp();
  return table;
}

struct ResultManifest {
  std::uint64_t config_digest = 0;
  std::string tool_version;
  int rows_written = 0;
  std::string started, finished;
  std::map<long long, std::vector<int>> seed_row_index;
  nlohmann::json config;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config_digest"] = config_digest;
    j["tool_version"] = tool_version;
    j["rows_written"] = rows_written;
    j["started"] = started;
    j["finished"] = finished;
    nlohmann::json idx = nlohmann::json::object();
    for (const auto& [seed, rows] : seed_row_index) idx[std::to_string(seed)] = rows;
    j["seed_row_index"] = idx;
    j["config"] = config;
    return j;
  }
};

inline constexpr const char* kCsvHeader =
    "axis,value,seed,test_loss,train_loss,label_term,noise_term,gamma,gamma_star,"
    "pole_flag,theory_loss,rel_err";

/// Writes the pinned CSV schema (floats at 17 significant digits) plus a
/// JSON manifest sidecar at <path>.manifest.json.  The CSV itself carries no
/// timestamps, so repeated runs with one master seed are byte-identical.
inline ResultManifest emit_csv(const SweepTable& table, const std::string& path) {
  std::vector<std::string> lines;
  ResultManifest manifest;
  int row_no = 0;
  for (const auto& row : table.rows) {
    std::ostringstream os;
    const bool optimized = table.base.gamma_mode == GammaMode::Optimize;
    const double gamma_star =
        optimized ? row.rec.gamma : std::numeric_limits<double>::quiet_NaN();
    os << table.axis << ',' << format_double(row.value) << ',' << row.seed << ','
       << format_double(row.rec.test_loss) << ',' << format_double(row.rec.train_loss)
       << ',' << format_double(row.rec.label_term) << ','
       << format_double(row.rec.noise_term) << ',' << format_double(row.rec.gamma) << ','
       << format_double(gamma_star) << ',' << (row.rec.near_pole ? 1 : 0) << ','
       << format_double(row.theory_loss) << ',' << format_double(row.rel_err);
    lines.push_back(os.str());
    manifest.seed_row_index[row.seed].push_back(row_no);
    ++row_no;
  }
  write_csv_atomic(path, kCsvHeader, lines);

  manifest.config_digest = table.base.digest();
  manifest.tool_version = kToolVersion;
  manifest.rows_written = row_no;
  manifest.started = table.started;
  manifest.finished = table.finished;
  manifest.config = table.base.to_json();
  std::ofstream mf(path + ".manifest.json");
  if (!mf) throw std::runtime_error("emit_csv: cannot write manifest for '" + path + "'");
  mf << manifest.to_json().dump(2) << "\n";
  return manifest;
}

struct ComparePoint {
  double value = 0.0;
  double simulated = 0.0;
  double theory = 0.0;
  double error = 0.0;   // relative, or absolute when theory == 0
  bool absolute = false;
  bool excluded = false;  // pole band
};

struct CompareReport {
  std::vector<ComparePoint> points;
  double max_error = 0.0;
  double mean_error = 0.0;
  int excluded_count = 0;

  std::string text() const {
    std::ostringstream os;
    os << "value,simulated,theory,error,excluded\n";
    for (const auto& p : points)
      os << format_double(p.value) << ',' << format_double(p.simulated) << ','
         << format_double(p.theory) << ',' << format_double(p.error) << ','
         << (p.excluded ? 1 : 0) << "\n";
    os << "# max_error=" << format_double(max_error)
       << " mean_error=" << format_double(mean_error)
       << " excluded=" << excluded_count << "\n";
    return os.str();
  }
};

/// Per-point relative error between the seed-mean simulation column and the
/// theory column, with the pole band masked out of the summary statistics.
inline CompareReport compare_report(const SweepTable& simulation,
                                    const SweepTable& theory) {
  if (simulation.axis != theory.axis)
    throw DomainError("compare_report: axis mismatch ('" + simulation.axis + "' vs '" +
                      theory.axis + "')");
  std::map<double, const SweepRow*> theory_rows;
  for (const auto& row : theory.rows)
    if (row.aggregate || row.seed == -1) theory_rows[row.value] = &row;

  CompareReport report;
  double sum = 0.0;
  int counted = 0;
  for (const auto& row : simulation.rows) {
    if (!(row.aggregate || row.seed == -1) || row.failed) continue;
    auto it = theory_rows.find(row.value);
    if (it == theory_rows.end())
      throw DomainError("compare_report: no theory row for axis value " +
                        format_double(row.value));
    ComparePoint p;
    p.value = row.value;
    p.simulated = row.rec.test_loss;
    p.theory = std::isfinite(it->second->theory_loss) ? it->second->theory_loss
                                                      : it->second->rec.test_loss;
    p.absolute = p.theory == 0.0;
    p.error = detail::relative_or_absolute_error(p.simulated, p.theory);
    p.excluded = row.rec.near_pole || !std::isfinite(p.theory);
    if (!p.excluded) {
      report.max_error = std::max(report.max_error, p.error);
      sum += p.error;
      ++counted;
    } else {
      ++report.excluded_count;
    }
    report.points.push_back(p);
  }
  if (report.points.empty())
    throw DomainError("compare_report: no aggregate rows to compare");
  report.mean_error = counted > 0 ? sum / counted : 0.0;
  return report;
}

}  // namespace scalinglab
