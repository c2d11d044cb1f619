#include <algorithm>
#include <cmath>
#include <limits>

#include "ebcs/pce.hpp"

namespace ebcs::pce {

namespace {

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& pred, const std::vector<Eigen::Index>& rows) {
  double mean = 0.0;
  for (auto m : rows) mean += y[m];
  mean /= static_cast<double>(rows.size());
  double sse = 0.0, sst = 0.0;
  for (auto m : rows) {
    sse += (y[m] - pred[m]) * (y[m] - pred[m]);
    sst += (y[m] - mean) * (y[m] - mean);
  }
  if (sst <= 0.0) return sse <= 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - sse / sst;
}

Eigen::VectorXd back_substitute(const Eigen::MatrixXd& r, const Eigen::VectorXd& b, Eigen::Index n) {
  return r.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(b.head(n));
}

}  // namespace

OmpResult omp_fit(const Design& design, const Eigen::VectorXd& y, const OmpOptions& options) {
  const Eigen::Index M = design.rows();
  if (y.size() != M) throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
  if (M < 2) throw Error(ErrorCode::Validation, "OMP needs at least 2 rows");
  OmpResult out;

  const double mean = compensated_sum(y) / static_cast<double>(M);
  if ((y.array() - mean).abs().maxCoeff() <= 1e-12 * std::max(1.0, std::abs(mean))) {
    // Column 0 is the zero multi-index, constant 1 before scaling.
    out.degenerate = true;
    out.active = {0};
    out.coefficients = Eigen::VectorXd::Constant(1, mean);
    out.stop_reason = "degenerate";
    out.validation_r2 = 1.0;
    out.residual_norm = (y.array() - mean).matrix().norm();
    out.residual_history = {out.residual_norm};
    return out;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Ones(M);
  std::vector<Eigen::Index> train, val;
  const int stride = options.val_fraction > 0.0 ? static_cast<int>(std::lround(1.0 / options.val_fraction)) : 0;
  for (Eigen::Index m = 0; m < M; ++m) {
    if (stride >= 2 && m % stride == stride - 1) {
      val.push_back(m);
      w[m] = 0.0;
    } else {
      train.push_back(m);
    }
  }
  const Eigen::Index cols = design.cols();
  int max_terms = options.max_terms > 0 ? options.max_terms
                                        : static_cast<int>(std::min<Eigen::Index>(train.size() / 3, cols));
  max_terms = static_cast<int>(std::min<Eigen::Index>({static_cast<Eigen::Index>(std::max(1, max_terms)), cols,
                                                      static_cast<Eigen::Index>(train.size())}));

  const Eigen::VectorXd yt = y.cwiseProduct(w);
  const double y_norm = yt.norm();
  Eigen::VectorXd train_norm = design.weighted_sq_norms(w).cwiseSqrt();
  std::vector<bool> blocked(cols, false);

  Eigen::MatrixXd q(M, max_terms);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(max_terms, max_terms);
  Eigen::VectorXd qty(max_terms);
  Eigen::MatrixXd full(M, max_terms);
  Eigen::VectorXd resid = yt;
  std::vector<Eigen::Index> active;

  double best_r2 = -std::numeric_limits<double>::infinity();
  std::size_t best_size = 0;
  double reference_r2 = -std::numeric_limits<double>::infinity();
  int stall = 0;
  out.stop_reason = "max_terms";

  while (static_cast<int>(active.size()) < max_terms) {
    const Eigen::VectorXd corr = design.correlate(resid);
    Eigen::Index pick = -1;
    double best_score = 0.0;
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (blocked[k] || train_norm[k] <= 1e-14) continue;
      const double score = std::abs(corr[k]) / train_norm[k];
      if (score > best_score) {
        best_score = score;
        pick = k;
      }
    }
    if (pick < 0 || best_score <= 1e-14 * y_norm) {
      out.stop_reason = "no_correlation";
      break;
    }
    blocked[pick] = true;

    const Eigen::VectorXd col = design.column(pick);
    Eigen::VectorXd v = col.cwiseProduct(w);
    const double v_norm = v.norm();
    const Eigen::Index n = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd proj = Eigen::VectorXd::Zero(n);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double c = q.col(i).dot(v);
        proj[i] += c;
        v -= c * q.col(i);
      }
    const double rest = v.norm();
    if (rest <= 1e-10 * v_norm) continue;  // dependent on the active set

    q.col(n) = v / rest;
    r.col(n).head(n) = proj;
    r(n, n) = rest;
    qty[n] = q.col(n).dot(yt);
    full.col(n) = col;
    active.push_back(pick);
    resid -= qty[n] * q.col(n);
    ++out.iterations;

    const double resid_norm = resid.norm();
    out.residual_history.push_back(resid_norm);
    if (resid_norm <= options.target_resid * y_norm) {
      out.stop_reason = "target_residual";
      best_size = active.size();
      break;
    }
    if (!val.empty()) {
      const Eigen::VectorXd coef = back_substitute(r, qty, n + 1);
      const Eigen::VectorXd pred = full.leftCols(n + 1) * coef;
      const double r2 = r_squared(y, pred, val);
      out.r2_history.push_back(r2);
      if (r2 > best_r2) {
        best_r2 = r2;
        best_size = active.size();
      }
      if (r2 - reference_r2 >= options.min_r2_gain) {
        reference_r2 = r2;
        stall = 0;
      } else if (++stall >= options.patience) {
        out.stop_reason = "validation_plateau";
        break;
      }
    } else {
      best_size = active.size();
    }
  }
  if (active.empty()) {
    out.degenerate = true;
    out.active = {0};
    out.coefficients = Eigen::VectorXd::Constant(1, mean);
    out.residual_norm = (y.array() - mean).matrix().norm();
    return out;
  }
  if (best_size == 0) best_size = active.size();
  active.resize(best_size);
  out.active = active;

  // Refit the selected support on every row.
  Eigen::MatrixXd a(M, best_size);
  for (std::size_t i = 0; i < best_size; ++i) a.col(i) = full.col(i);
  const Eigen::VectorXd scaled_coef = a.colPivHouseholderQr().solve(y);
  out.residual_norm = (y - a * scaled_coef).norm();
  out.coefficients.resize(best_size);
  for (std::size_t i = 0; i < best_size; ++i) out.coefficients[i] = scaled_coef[i] / design.scales()[active[i]];

  if (!val.empty()) out.validation_r2 = best_size <= out.r2_history.size() ? out.r2_history[best_size - 1] : 1.0;
  else out.validation_r2 = std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace ebcs::pce
