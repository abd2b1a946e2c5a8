// scalinglab command line: seeded simulations of random-feature ridge
// regression on synthetic power-law data, the matching analytic loss curves,
// spectrum and intrinsic-dimension studies, phenomenological fits, and
// simulation/theory comparison reports.  All outputs are plot-ready CSV.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scalinglab/config.hpp"
#include "scalinglab/csv.hpp"
#include "scalinglab/harness.hpp"
#include "scalinglab/phenom.hpp"
#include "scalinglab/rmt_theory.hpp"
#include "scalinglab/spectral_analysis.hpp"

namespace sl = scalinglab;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value, dot-separated nesting
  std::string out_path;
  std::string axis_name = "T";
  std::string values_csv;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

nlohmann::json parse_override_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return nlohmann::json(text);  // bare string
  }
}

sl::ExperimentConfig load_config(const CommonOptions& opt) {
  nlohmann::json j = nlohmann::json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw sl::ParseError("cannot open config '" + opt.config_path + "'");
    in >> j;
  }
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw sl::ParseError("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    nlohmann::json* node = &j;
    std::size_t pos = 0;
    while (true) {
      const auto dot = key.find('.', pos);
      if (dot == std::string::npos) {
        (*node)[key.substr(pos)] = parse_override_value(kv.substr(eq + 1));
        break;
      }
      node = &(*node)[key.substr(pos, dot - pos)];
      pos = dot + 1;
    }
  }
  sl::ExperimentConfig cfg = sl::ExperimentConfig::from_json(j);
  if (opt.seed_given) cfg.seed = opt.seed;
  return cfg;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    values.push_back(std::stod(item));
  }
  return values;
}

int resolve_threads(int requested) {
  return requested > 0 ? requested : sl::default_thread_count();
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_axis) {
  cmd->add_option("--config", opt.config_path, "JSON experiment config");
  cmd->add_option("--set", opt.overrides, "override config values (key=value)");
  cmd->add_option("--out", opt.out_path, "output CSV path");
  cmd->add_option("--threads", opt.threads, "worker threads (default: all cores)");
  cmd->add_option("--seed", opt.seed, "master seed override")
      ->each([&opt](const std::string&) { opt.seed_given = true; });
  if (with_axis) {
    cmd->add_option("--axis", opt.axis_name, "sweep axis: T, N, M, alpha, gamma");
    cmd->add_option("--values", opt.values_csv, "comma-separated axis values");
  }
}

sl::SweepTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sl::ParseError("cannot open '" + path + "'");
  std::string header_line, first_row;
  std::getline(in, header_line);
  if (header_line != sl::kCsvHeader)
    throw sl::ParseError("'" + path + "' does not use the sweep CSV schema");
  std::getline(in, first_row);
  sl::SweepTable table;
  table.axis = first_row.substr(0, first_row.find(','));

  std::ifstream rows(path);
  std::string line;
  std::getline(rows, line);  // header
  while (std::getline(rows, line)) {
    if (line.empty()) continue;
    const auto cells = sl::split_csv_line(line);
    if (cells.size() != 12) throw sl::ParseError("ragged row in '" + path + "'");
    sl::SweepRow row;
    row.value = std::stod(cells[1]);
    row.seed = std::stoll(cells[2]);
    row.aggregate = row.seed == -1;
    row.rec.test_loss = std::strtod(cells[3].c_str(), nullptr);
    row.rec.train_loss = std::strtod(cells[4].c_str(), nullptr);
    row.rec.label_term = std::strtod(cells[5].c_str(), nullptr);
    row.rec.noise_term = std::strtod(cells[6].c_str(), nullptr);
    row.rec.gamma = std::strtod(cells[7].c_str(), nullptr);
    row.rec.near_pole = cells[9] == "1";
    row.theory_loss = std::strtod(cells[10].c_str(), nullptr);
    row.rel_err = std::strtod(cells[11].c_str(), nullptr);
    table.rows.push_back(row);
  }
  return table;
}

int cmd_spectrum(const CommonOptions& opt, const std::string& matrix_path,
                 const std::string& source) {
  std::vector<double> eigs;
  if (!matrix_path.empty()) {
    const sl::Matrix m = sl::load_matrix(matrix_path, true);
    eigs = sl::covariance_spectrum(m);
  } else {
    const sl::ExperimentConfig cfg = load_config(opt);
    const sl::Spectrum spectrum = cfg.make_spectrum();
    const sl::Matrix x = sl::sample_latents(
        spectrum, cfg.T, sl::substream_seed(cfg.seed, sl::Stream::TrainLatents));
    if (source == "latent") {
      eigs = sl::covariance_spectrum(x);
    } else if (source == "features") {
      auto features = sl::detail::build_features(cfg, x, sl::Matrix::Zero(cfg.M, 1), cfg.seed);
      eigs = sl::covariance_spectrum(features.phi);
    } else {
      throw sl::DomainError("spectrum: --source must be 'latent' or 'features'");
    }
  }

  if (!opt.out_path.empty()) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < eigs.size(); ++i)
      lines.push_back(std::to_string(i + 1) + "," + sl::format_double(eigs[i]));
    sl::write_csv_atomic(opt.out_path, "index,eigenvalue", lines);
  }

  int positive = 0;
  for (double v : eigs) {
    if (v <= 0) break;
    ++positive;
  }
  std::cout << "eigenvalues: " << eigs.size() << " (positive: " << positive << ")\n";
  if (positive >= 20) {
    const auto [fit, extent] = sl::default_spectrum_fit(eigs);
    std::cout << "power-law fit: alpha_hat=" << fit.alpha_hat
              << " lambda_hat=" << fit.lambda_hat << " range=[" << fit.fit_begin << ","
              << fit.fit_end << "] residual=" << fit.residual << " extent=" << extent
              << "\n";
  }
  return 0;
}

int cmd_simulate(const CommonOptions& opt) {
  sl::SweepSpec spec;
  spec.base = load_config(opt);
  spec.axis = sl::sweep_axis_from_name(opt.axis_name);
  spec.values = opt.values_csv.empty() ? std::vector<double>()
                                       : parse_values(opt.values_csv);
  if (spec.values.empty()) {
    switch (spec.axis) {
      case sl::SweepAxis::T: spec.values = {static_cast<double>(spec.base.T)}; break;
      case sl::SweepAxis::N: spec.values = {static_cast<double>(spec.base.N)}; break;
      case sl::SweepAxis::M: spec.values = {static_cast<double>(spec.base.M)}; break;
      case sl::SweepAxis::Alpha: spec.values = {spec.base.alpha}; break;
      case sl::SweepAxis::Gamma: spec.values = {spec.base.gamma_value}; break;
    }
  }
  const sl::SweepTable table = sl::run_sweep(spec, resolve_threads(opt.threads));
  int failures = 0;
  for (const auto& row : table.rows)
    if (row.failed) {
      ++failures;
      std::cerr << "row failure (value=" << row.value << ", seed=" << row.seed
                << "): " << row.error << "\n";
    }
  if (!opt.out_path.empty()) {
    const auto manifest = sl::emit_csv(table, opt.out_path);
    std::cout << "wrote " << manifest.rows_written << " rows to " << opt.out_path << "\n";
  } else {
    for (const auto& row : table.rows)
      if (row.aggregate)
        std::cout << table.axis << "=" << row.value << " mean_loss=" << row.rec.test_loss
                  << " theory=" << row.theory_loss << " rel_err=" << row.rel_err << "\n";
  }
  return failures == 0 ? 0 : 2;
}

int cmd_theory(const CommonOptions& opt) {
  sl::SweepSpec spec;
  spec.base = load_config(opt);
  spec.axis = sl::sweep_axis_from_name(opt.axis_name);
  spec.values = parse_values(opt.values_csv);
  if (spec.values.empty()) throw sl::DomainError("theory: --values is required");

  sl::SweepTable table;
  table.axis = sl::sweep_axis_name(spec.axis);
  table.base = spec.base;
  table.started = table.finished = "";
  for (double value : spec.values) {
    sl::ExperimentConfig cfg = sl::apply_axis_value(spec.base, spec.axis, value);
    sl::SweepRow row;
    row.value = value;
    row.seed = -1;
    row.aggregate = true;
    const auto theory = sl::theory_loss_for(cfg);
    row.theory_loss = theory ? *theory : std::numeric_limits<double>::quiet_NaN();
    row.rec.test_loss = std::numeric_limits<double>::quiet_NaN();
    row.rec.near_pole =
        std::abs(cfg.N - cfg.T) / static_cast<double>(std::max(cfg.N, cfg.T)) < 0.05;
    table.rows.push_back(row);
    std::cout << table.axis << "=" << value << " theory_loss=" << row.theory_loss << "\n";
  }
  if (!opt.out_path.empty()) sl::emit_csv(table, opt.out_path);
  return 0;
}

int cmd_fit(const std::vector<std::string>& inputs, const std::string& model_name,
            const std::string& out_path) {
  if (inputs.empty()) throw sl::DomainError("fit: at least one --in file is required");
  const sl::PhenomModel model = sl::phenom_model_from_name(model_name);
  std::vector<sl::LossRecord> records;
  for (const auto& path : inputs) {
    std::ifstream mf(path + ".manifest.json");
    if (!mf) throw sl::ParseError("fit: missing manifest for '" + path + "'");
    nlohmann::json mj;
    mf >> mj;
    const sl::ExperimentConfig cfg = sl::ExperimentConfig::from_json(mj.at("config"));
    const sl::SweepTable table = load_table(path);
    for (const auto& row : table.rows) {
      if (!row.aggregate) continue;
      sl::ExperimentConfig at = sl::apply_axis_value(
          cfg, sl::sweep_axis_from_name(table.axis), row.value);
      sl::LossRecord rec = row.rec;
      rec.n_features = at.N;
      rec.n_train = at.T;
      rec.n_latent = at.M;
      records.push_back(rec);
    }
  }
  const sl::PhenomenologicalFit fit = sl::fit_phenomenological(records, model);
  nlohmann::json j;
  j["model"] = sl::phenom_model_name(fit.model);
  j["L0"] = fit.L0;
  j["alpha_N"] = fit.alpha_N;
  j["alpha_T"] = fit.alpha_T;
  j["N_c"] = fit.N_c;
  j["T_c"] = fit.T_c;
  if (fit.latent_size > 0) j["latent_size"] = fit.latent_size;
  if (fit.model == sl::PhenomModel::NoiseBreakdown) j["bump_c"] = fit.bump_c;
  j["residual"] = fit.residual;
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_dimension(const CommonOptions& opt, const std::string& sizes_csv,
                  int replicates) {
  const sl::ExperimentConfig cfg = load_config(opt);
  std::vector<double> sizes_d = parse_values(
      sizes_csv.empty() ? "100,200,400,800,1600" : sizes_csv);
  std::vector<int> sizes;
  for (double v : sizes_d) sizes.push_back(static_cast<int>(v));
  const sl::Spectrum spectrum = cfg.make_spectrum();
  auto sampler = [&spectrum](int t, std::uint64_t seed) {
    return sl::sample_latents(spectrum, t, seed);
  };
  const sl::DimensionEstimate est =
      sl::estimate_intrinsic_dimension(sampler, sizes, replicates, cfg.seed);
  std::cout << "d_int=" << est.d_int << " slope=" << est.slope
            << " r_squared=" << est.r_squared << "\n";
  if (!opt.out_path.empty()) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < est.sample_sizes.size(); ++i)
      lines.push_back(std::to_string(est.sample_sizes[i]) + "," +
                      sl::format_double(est.mean_distances[i]));
    sl::write_csv_atomic(opt.out_path, "T,mean_nn_distance", lines);
  }
  return 0;
}

int cmd_compare(const std::string& sim_path, const std::string& theory_path,
                const std::string& out_path) {
  const sl::SweepTable sim = load_table(sim_path);
  const sl::SweepTable theory = load_table(theory_path);
  const sl::CompareReport report = sl::compare_report(sim, theory);
  std::cout << report.text();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << report.text();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scalinglab: random-feature scaling-law laboratory"};
  app.require_subcommand(1);

  CommonOptions spectrum_opt, simulate_opt, theory_opt, dimension_opt;
  std::string matrix_path, source = "latent";
  auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenvalue spectra and power-law fits");
  add_common(spectrum_cmd, spectrum_opt, false);
  spectrum_cmd->add_option("--matrix", matrix_path, "analyze an external CSV matrix");
  spectrum_cmd->add_option("--source", source, "latent | features");

  auto* simulate_cmd = app.add_subcommand("simulate", "run seeded experiments");
  add_common(simulate_cmd, simulate_opt, true);

  auto* theory_cmd = app.add_subcommand("theory", "evaluate analytic loss curves");
  add_common(theory_cmd, theory_opt, true);

  std::vector<std::string> fit_inputs;
  std::string fit_model = "simplified", fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "phenomenological fits of loss tables");
  fit_cmd->add_option("--in", fit_inputs, "input sweep CSVs (with manifests)")->required();
  fit_cmd->add_option("--model", fit_model,
                      "original | simplified | improved | breakdown | noise_breakdown");
  fit_cmd->add_option("--out", fit_out, "output JSON path");

  std::string dim_sizes;
  int dim_replicates = 3;
  auto* dimension_cmd = app.add_subcommand("dimension", "intrinsic-dimension study");
  add_common(dimension_cmd, dimension_opt, false);
  dimension_cmd->add_option("--sizes", dim_sizes, "comma-separated sample sizes");
  dimension_cmd->add_option("--replicates", dim_replicates, "replicates per size");

  std::string cmp_sim, cmp_theory, cmp_out;
  auto* compare_cmd = app.add_subcommand("compare", "simulation vs theory report");
  compare_cmd->add_option("--sim", cmp_sim, "simulation CSV")->required();
  compare_cmd->add_option("--theory", cmp_theory, "theory CSV")->required();
  compare_cmd->add_option("--out", cmp_out, "report output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum_cmd->parsed()) return cmd_spectrum(spectrum_opt, matrix_path, source);
    if (simulate_cmd->parsed()) return cmd_simulate(simulate_opt);
    if (theory_cmd->parsed()) return cmd_theory(theory_opt);
    if (fit_cmd->parsed()) return cmd_fit(fit_inputs, fit_model, fit_out);
    if (dimension_cmd->parsed()) return cmd_dimension(dimension_opt, dim_sizes, dim_replicates);
    if (compare_cmd->parsed()) return cmd_compare(cmp_sim, cmp_theory, cmp_out);
  } catch (const sl::PipelineError& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
