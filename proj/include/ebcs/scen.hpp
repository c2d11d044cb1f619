#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebcs/error.hpp"

namespace ebcs::scen {

/// Per-dimension Gaussian KDE over retained history rows (days x dimensions).
struct KdeModel {
  Eigen::MatrixXd samples;
  /// Zero for frozen dimensions.
  Eigen::VectorXd bandwidth;
  std::vector<bool> frozen;

  int dims() const { return static_cast<int>(samples.cols()); }
  int size() const { return static_cast<int>(samples.rows()); }
};

/// 1.06 x sample std x M^(-1/5); DEGENERATE when the std is below 1e-12.
double silverman_bandwidth(const Eigen::VectorXd& samples);

/// Frozen dimensions are those with (near) zero spread; EMPTY_HISTORY on zero rows.
KdeModel fit_kde(const Eigen::MatrixXd& history, double frozen_tol = 1e-12);

/// FROZEN_DIMENSION for a frozen dimension.
double kde_pdf(const KdeModel& model, int dim, double x);

/// Seed of the independent stream for scenario `index`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag);

/// Smoothed bootstrap: one history row per output row plus N(0, bandwidth_j) noise, clamped at 0.
/// Row i depends only on (seed, first_index + i).
Eigen::MatrixXd sample_solar_scenarios(const KdeModel& model, int count, std::uint64_t seed, long first_index = 0);
Eigen::MatrixXd sample_solar_scenarios(const Eigen::MatrixXd& history, int count, std::uint64_t seed);

/// A uniformly chosen history row scaled elementwise by independent U[1 - delta, 1 + delta] factors.
Eigen::MatrixXd perturb_prices(const Eigen::MatrixXd& history, int count, double delta, std::uint64_t seed,
                               long first_index = 0);

/// Everything needed to draw validation scenarios: solar KDE plus the price history and its spread.
struct ScenarioModel {
  static constexpr const char* kFormat = "ebcs.scenarios";
  static constexpr int kFormatVersion = 1;

  KdeModel solar;
  Eigen::MatrixXd price_history;
  double delta = 0.10;

  std::string to_json() const;
  static ScenarioModel from_json(const std::string& text);
};

ScenarioModel infer_scenario_model(const Eigen::MatrixXd& solar_history, const Eigen::MatrixXd& price_history,
                                   double delta);

struct ScenarioBatch {
  Eigen::MatrixXd solar_kw;
  Eigen::MatrixXd price_cents_per_kwh;
};

ScenarioBatch generate_scenarios(const ScenarioModel& model, int count, std::uint64_t seed, long first_index = 0);

}  // namespace ebcs::scen
