#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "scalinglab/spectrum.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

inline constexpr const char* kToolVersion = "0.1.0";

enum class GammaMode { Fixed, Optimize, Ridgeless };
enum class FeatureMapKind { LinearLatent, Relu };
enum class SpectrumKind { PowerLaw, Isotropic };

/// Every scale and variance of one experiment.  Serialized as JSON; CLI flags
/// override file values and the effective config is embedded in the manifest.
struct ExperimentConfig {
  int M = 1000;
  int N = 100;
  int T = 1000;
  int T_hat = 1000;
  int C = 1;
  double alpha = 1.0;
  double lambda_max = 1.0;
  double sigma_w_sq = 1.0;
  double sigma_eps_sq = 0.0;
  std::optional<double> sigma_u_sq;  // default 1 (linear) or 2 (relu) over fan-in
  GammaMode gamma_mode = GammaMode::Ridgeless;
  double gamma_value = 0.0;
  FeatureMapKind feature_map = FeatureMapKind::LinearLatent;
  bool identity_features = false;  // u = I, requires N == M
  int n_in = 0;                    // relu input dimension, must be in [1, M]
  SpectrumKind spectrum_kind = SpectrumKind::PowerLaw;
  double sigma_x_sq = 1.0;  // isotropic spectra only
  std::uint64_t seed = 1;   // master seed
  std::vector<std::uint64_t> seeds;  // explicit replicate seeds (optional)
  int replicate_count = 0;           // 0 = policy default
  int ridge_grid_points = 25;

  void validate() const {
    require_domain(M >= 1 && N >= 1 && T >= 1 && T_hat >= 1 && C >= 1,
                   "config: M, N, T, T_hat, C must be positive");
    require_domain(alpha > 0.0 && lambda_max > 0.0,
                   "config: alpha and lambda_max must be positive");
    require_domain(sigma_w_sq >= 0.0 && sigma_eps_sq >= 0.0 && sigma_x_sq >= 0.0,
                   "config: variances must be non-negative");
    if (sigma_u_sq) require_domain(*sigma_u_sq >= 0.0, "config: sigma_u_sq must be >= 0");
    if (gamma_mode == GammaMode::Fixed)
      require_domain(gamma_value >= 0.0, "config: gamma must be >= 0");
    if (feature_map == FeatureMapKind::Relu)
      require_domain(n_in >= 1 && n_in <= M, "config: relu requires 1 <= n_in <= M");
    if (identity_features)
      require_domain(N == M, "config: identity_features requires N == M");
    require_domain(ridge_grid_points >= 2, "config: ridge_grid_points must be >= 2");
  }

  Spectrum make_spectrum() const {
    if (spectrum_kind == SpectrumKind::Isotropic) return Spectrum::isotropic(M, sigma_x_sq);
    return Spectrum::power_law(M, alpha, lambda_max);
  }

  double resolved_sigma_u_sq() const {
    if (sigma_u_sq) return *sigma_u_sq;
    return feature_map == FeatureMapKind::Relu ? 2.0 : 1.0;
  }

  /// Replicate seeds: the explicit list when given, otherwise sequential
  /// seeds from the master seed.  Small scales carry large realization
  /// variance, so points with min(N, T) < 100 default to 10 replicates and
  /// everything else to 3.
  std::vector<std::uint64_t> effective_seeds() const {
    if (!seeds.empty()) return seeds;
    int n = replicate_count;
    if (n <= 0) n = (std::min(N, T) < 100) ? 10 : 3;
    std::vector<std::uint64_t> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = seed + static_cast<std::uint64_t>(i);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["M"] = M;
    j["N"] = N;
    j["T"] = T;
    j["T_hat"] = T_hat;
    j["C"] = C;
    j["alpha"] = alpha;
    j["lambda_max"] = lambda_max;
    j["sigma_w_sq"] = sigma_w_sq;
    j["sigma_eps_sq"] = sigma_eps_sq;
    if (sigma_u_sq) j["sigma_u_sq"] = *sigma_u_sq;
    switch (gamma_mode) {
      case GammaMode::Fixed: j["gamma"] = gamma_value; break;
      case GammaMode::Optimize: j["gamma"] = "optimize"; break;
      case GammaMode::Ridgeless: j["gamma"] = "ridgeless"; break;
    }
    j["feature_map"] =
        feature_map == FeatureMapKind::Relu ? "relu" : "linear_latent";
    j["identity_features"] = identity_features;
    if (n_in > 0) j["n_in"] = n_in;
    j["spectrum"] = nlohmann::json::object();
    j["spectrum"]["kind"] =
        spectrum_kind == SpectrumKind::Isotropic ? "isotropic" : "power_law";
    if (spectrum_kind == SpectrumKind::Isotropic)
      j["spectrum"]["sigma_x_sq"] = sigma_x_sq;
    j["seed"] = seed;
    if (!seeds.empty()) j["seeds"] = seeds;
    if (replicate_count > 0) j["replicate_count"] = replicate_count;
    j["ridge_grid_points"] = ridge_grid_points;
    return j;
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    get("M", c.M);
    get("N", c.N);
    get("T", c.T);
    get("T_hat", c.T_hat);
    get("C", c.C);
    get("alpha", c.alpha);
    get("lambda_max", c.lambda_max);
    get("sigma_w_sq", c.sigma_w_sq);
    get("sigma_eps_sq", c.sigma_eps_sq);
    if (j.contains("sigma_u_sq") && !j.at("sigma_u_sq").is_null())
      c.sigma_u_sq = j.at("sigma_u_sq").get<double>();
    if (j.contains("gamma")) {
      const auto& g = j.at("gamma");
      if (g.is_string()) {
        const std::string s = g.get<std::string>();
        if (s == "optimize")
          c.gamma_mode = GammaMode::Optimize;
        else if (s == "ridgeless")
          c.gamma_mode = GammaMode::Ridgeless;
        else
          throw ParseError("config: gamma must be a number, 'optimize' or 'ridgeless'");
      } else {
        c.gamma_mode = GammaMode::Fixed;
        c.gamma_value = g.get<double>();
      }
    }
    if (j.contains("feature_map")) {
      const std::string s = j.at("feature_map").get<std::string>();
      if (s == "relu")
        c.feature_map = FeatureMapKind::Relu;
      else if (s == "linear_latent")
        c.feature_map = FeatureMapKind::LinearLatent;
      else
        throw ParseError("config: feature_map must be 'linear_latent' or 'relu'");
    }
    get("identity_features", c.identity_features);
    get("n_in", c.n_in);
    if (j.contains("spectrum")) {
      const auto& s = j.at("spectrum");
      const std::string kind = s.value("kind", "power_law");
      if (kind == "isotropic") {
        c.spectrum_kind = SpectrumKind::Isotropic;
        c.sigma_x_sq = s.value("sigma_x_sq", 1.0);
      } else if (kind == "power_law") {
        c.spectrum_kind = SpectrumKind::PowerLaw;
      } else {
        throw ParseError("config: spectrum.kind must be 'power_law' or 'isotropic'");
      }
    }
    get("seed", c.seed);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    get("replicate_count", c.replicate_count);
    get("ridge_grid_points", c.ridge_grid_points);
    c.validate();
    return c;
  }

  /// FNV-1a over the canonical JSON dump; recomputable from the stored config.
  std::uint64_t digest() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : dump) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

inline int default_thread_count() {
  if (const char* env = std::getenv("SCALINGLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace scalinglab
