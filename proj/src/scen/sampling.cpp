#include <algorithm>
#include <random>

#include "ebcs/scen.hpp"

namespace ebcs::scen {

namespace {

constexpr std::uint64_t kSolarTag = 0x736f6c6172ULL;
constexpr std::uint64_t kPriceTag = 0x7072696365ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
  return splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index);
}

Eigen::MatrixXd sample_solar_scenarios(const KdeModel& model, int count, std::uint64_t seed, long first_index) {
  if (model.size() == 0) throw Error(ErrorCode::EmptyHistory, "no history rows to sample from");
  if (count < 0) throw Error(ErrorCode::Validation, "negative scenario count");
  Eigen::MatrixXd out(count, model.dims());
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(first_index + i), kSolarTag));
    std::uniform_int_distribution<int> pick(0, model.size() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int day = pick(rng);
    for (int j = 0; j < model.dims(); ++j) {
      double v = model.samples(day, j);
      if (!model.frozen[j] && model.bandwidth[j] > 0.0) v += model.bandwidth[j] * noise(rng);
      out(i, j) = std::max(0.0, v);
    }
  }
  return out;
}

Eigen::MatrixXd sample_solar_scenarios(const Eigen::MatrixXd& history, int count, std::uint64_t seed) {
  return sample_solar_scenarios(fit_kde(history), count, seed);
}

Eigen::MatrixXd perturb_prices(const Eigen::MatrixXd& history, int count, double delta, std::uint64_t seed,
                               long first_index) {
  if (history.rows() == 0) throw Error(ErrorCode::EmptyHistory, "no price history to perturb");
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorCode::Validation, "delta must lie in [0, 1)");
  if (count < 0) throw Error(ErrorCode::Validation, "negative scenario count");
  Eigen::MatrixXd out(count, history.cols());
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(first_index + i), kPriceTag));
    std::uniform_int_distribution<Eigen::Index> pick(0, history.rows() - 1);
    std::uniform_real_distribution<double> factor(1.0 - delta, 1.0 + delta);
    const Eigen::Index day = pick(rng);
    for (Eigen::Index j = 0; j < history.cols(); ++j) out(i, j) = history(day, j) * factor(rng);
  }
  return out;
}

ScenarioBatch generate_scenarios(const ScenarioModel& model, int count, std::uint64_t seed, long first_index) {
  return {sample_solar_scenarios(model.solar, count, seed, first_index),
          perturb_prices(model.price_history, count, model.delta, seed, first_index)};
}

}  // namespace ebcs::scen
