#include <cmath>
#include <random>

#include <doctest.h>

#include "ebcs/scen.hpp"
#include "fixtures.hpp"

using namespace ebcs;
using namespace ebcs::scen;

namespace {

double sample_var(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

/// Columns: a high-mean unclamped dimension, a constant, and one with mass near zero.
Eigen::MatrixXd solar_history(int days, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd h(days, 3);
  for (int d = 0; d < days; ++d) {
    h(d, 0) = 100.0 + 15.0 * n(rng);
    h(d, 1) = 0.0;
    h(d, 2) = std::abs(2.0 * n(rng));
  }
  return h;
}

}  // namespace

TEST_SUITE("scen") {
  TEST_CASE("Silverman bandwidth for unit spread and 100 samples") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd x(100);
    for (auto& v : x) v = n(rng);
    x = ((x.array() - x.mean()) / std::sqrt(sample_var(x))).matrix();
    // 1.06 * 100^(-1/5)
    CHECK(silverman_bandwidth(x) == doctest::Approx(0.42199360).epsilon(1e-7));
    CHECK(silverman_bandwidth(3.0 * x) == doctest::Approx(3.0 * silverman_bandwidth(x)));
    CHECK(test::error_code_of([] { silverman_bandwidth(Eigen::VectorXd::Constant(10, 2.0)); }) ==
          ErrorCode::Degenerate);
  }

  TEST_CASE("density of a single kernel") {
    KdeModel m;
    m.samples = Eigen::MatrixXd::Zero(1, 1);
    m.bandwidth = Eigen::VectorXd::Ones(1);
    m.frozen = {false};
    CHECK(kde_pdf(m, 0, 0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  }

  TEST_CASE("density symmetry and normalization") {
    Eigen::MatrixXd s(2, 1);
    s << -1.5, 1.5;
    const auto m = fit_kde(s);
    for (double x : {0.1, 0.7, 2.0, 5.0}) CHECK(kde_pdf(m, 0, x) == doctest::Approx(kde_pdf(m, 0, -x)));

    const auto h = solar_history(200, 2);
    const auto k = fit_kde(h);
    for (int j : {0, 2}) {
      const double w = k.bandwidth[j];
      const double lo = h.col(j).minCoeff() - 8.0 * w, hi = h.col(j).maxCoeff() + 8.0 * w;
      const int n = 20000;
      const double dx = (hi - lo) / n;
      double integral = 0.5 * (kde_pdf(k, j, lo) + kde_pdf(k, j, hi));
      for (int i = 1; i < n; ++i) integral += kde_pdf(k, j, lo + i * dx);
      CHECK(integral * dx == doctest::Approx(1.0).epsilon(1e-3));
    }
    CHECK(test::error_code_of([&] { kde_pdf(k, 1, 0.0); }) == ErrorCode::FrozenDimension);
  }

  TEST_CASE("fitted KDE freezes constant dimensions") {
    const auto k = fit_kde(solar_history(50, 3));
    CHECK(k.frozen == std::vector<bool>{false, true, false});
    CHECK(k.bandwidth[1] == 0.0);
    CHECK(k.bandwidth[0] > 0.0);
    CHECK(test::error_code_of([] { fit_kde(Eigen::MatrixXd(0, 3)); }) == ErrorCode::EmptyHistory);
  }

  TEST_CASE("smoothed bootstrap moments") {
    const auto h = solar_history(150, 4);
    const auto k = fit_kde(h);
    const Eigen::MatrixXd s = sample_solar_scenarios(k, 100000, 99);
    REQUIRE(s.rows() == 100000);
    CHECK(s.minCoeff() >= 0.0);
    CHECK((s.col(1).array() == 0.0).all());
    const double expected = sample_var(h.col(0)) * (h.rows() - 1.0) / h.rows() + k.bandwidth[0] * k.bandwidth[0];
    CHECK(sample_var(s.col(0)) == doctest::Approx(expected).epsilon(0.05));
    CHECK(s.col(0).mean() == doctest::Approx(h.col(0).mean()).epsilon(0.02));
    CHECK(s.col(2).mean() == doctest::Approx(h.col(2).mean()).epsilon(0.1));
  }

  TEST_CASE("bootstrap without smoothing returns history rows") {
    const auto h = solar_history(20, 5);
    KdeModel k = fit_kde(h);
    k.bandwidth.setZero();
    const Eigen::MatrixXd s = sample_solar_scenarios(k, 200, 6);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      bool found = false;
      for (Eigen::Index d = 0; d < h.rows() && !found; ++d) found = (s.row(i) - h.row(d)).cwiseAbs().maxCoeff() == 0.0;
      CHECK(found);
    }
    CHECK(sample_solar_scenarios(k, 0, 6).rows() == 0);
  }

  TEST_CASE("sampling streams depend only on seed and index") {
    const auto k = fit_kde(solar_history(30, 7));
    const Eigen::MatrixXd all = sample_solar_scenarios(k, 50, 123);
    const Eigen::MatrixXd tail = sample_solar_scenarios(k, 20, 123, 30);
    CHECK((all.bottomRows(20) - tail).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sample_solar_scenarios(k, 50, 123) - all).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sample_solar_scenarios(k, 50, 124) - all).cwiseAbs().maxCoeff() > 0.0);
    CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 2));
  }

  TEST_CASE("price perturbation") {
    Eigen::MatrixXd h(3, 4);
    h << 5.0, -1.2, 3.0, 8.0, 4.0, 2.0, -0.5, 6.0, 7.0, 1.0, 2.5, 9.0;
    const Eigen::MatrixXd copies = perturb_prices(h, 100, 0.0, 8);
    for (Eigen::Index i = 0; i < copies.rows(); ++i) {
      bool found = false;
      for (Eigen::Index d = 0; d < h.rows() && !found; ++d) found = (copies.row(i) - h.row(d)).cwiseAbs().maxCoeff() == 0.0;
      CHECK(found);
    }

    const double delta = 0.1;
    const Eigen::MatrixXd one_day = h.topRows(1);
    const Eigen::MatrixXd p = perturb_prices(one_day, 100000, delta, 9);
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double base = one_day(0, j);
      const double lo = std::min(base * (1 - delta), base * (1 + delta));
      const double hi = std::max(base * (1 - delta), base * (1 + delta));
      CHECK(p.col(j).minCoeff() >= lo);
      CHECK(p.col(j).maxCoeff() <= hi);
      CHECK(p.col(j).mean() == doctest::Approx(base).epsilon(0.01));
    }

    const Eigen::MatrixXd mixed = perturb_prices(h, 100000, delta, 10);
    CHECK(mixed.col(0).mean() == doctest::Approx(h.col(0).mean()).epsilon(0.01));
    CHECK(test::error_code_of([] { perturb_prices(Eigen::MatrixXd(0, 24), 5, 0.1, 1); }) == ErrorCode::EmptyHistory);
  }

  TEST_CASE("scenario model round trip and generation") {
    const auto h = solar_history(40, 11);
    Eigen::MatrixXd prices = Eigen::MatrixXd::Random(40, 24).array() * 3.0 + 6.0;
    const auto m = infer_scenario_model(h, prices, 0.1);
    const auto back = ScenarioModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    const auto a = generate_scenarios(m, 25, 5);
    const auto b = generate_scenarios(back, 25, 5);
    CHECK(a.solar_kw.rows() == 25);
    CHECK(a.price_cents_per_kwh.cols() == 24);
    CHECK((a.solar_kw - b.solar_kw).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.price_cents_per_kwh - b.price_cents_per_kwh).cwiseAbs().maxCoeff() == 0.0);
    CHECK(test::error_code_of([] { ScenarioModel::from_json("{}"); }) == ErrorCode::Parse);
  }
}
