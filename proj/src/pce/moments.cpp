#include <cmath>
#include <limits>

#include "ebcs/pce.hpp"

namespace ebcs::pce {

namespace {

/// Neumaier summation.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) carry += (sum - t) + v;
    else carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace

double compensated_sum(const Eigen::VectorXd& values) {
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value();
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != input_dims())
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(input_dims()) + " input columns, got " +
                                                  std::to_string(raw.cols()));
  Eigen::MatrixXd z(raw.rows(), active_count());
  for (int k = 0; k < active_count(); ++k) {
    const int j = active_dims[k];
    z.col(k) = (raw.col(j).array() - mean[j]) / std[j];
  }
  return z;
}

Standardized standardize(const Eigen::MatrixXd& samples, double frozen_tol) {
  const Eigen::Index M = samples.rows();
  const Eigen::Index D = samples.cols();
  if (M < 2) throw Error(ErrorCode::Validation, "standardize needs at least 2 samples");
  Standardized out;
  auto& p = out.params;
  p.mean.resize(D);
  p.std.resize(D);
  p.frozen.assign(D, false);
  for (Eigen::Index j = 0; j < D; ++j) {
    const double mean = compensated_sum(samples.col(j)) / M;
    const double var = compensated_sum((samples.col(j).array() - mean).square().matrix()) / M;
    p.mean[j] = mean;
    p.std[j] = std::sqrt(var);
    if (p.std[j] < frozen_tol) p.frozen[j] = true;
    else p.active_dims.push_back(static_cast<int>(j));
  }
  if (p.active_dims.empty()) throw Error(ErrorCode::AllFrozen, "every input dimension is constant");
  out.values = p.apply(samples);
  return out;
}

MomentTable raw_moments(const Eigen::MatrixXd& z, int order) {
  MomentTable t;
  t.order = order;
  const int count = std::max(1, 2 * order);
  t.moments.resize(count, z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    std::vector<CompensatedSum> acc(count);
    for (Eigen::Index m = 0; m < z.rows(); ++m) {
      double power = 1.0;
      for (int s = 0; s < count; ++s) {
        acc[s].add(power);
        power *= z(m, j);
      }
    }
    for (int s = 0; s < count; ++s) t.moments(s, j) = acc[s].value() / static_cast<double>(z.rows());
  }
  return t;
}

BasisPolynomial univariate_basis(const Eigen::VectorXd& moments, int degree) {
  if (degree < 0) throw Error(ErrorCode::Validation, "negative polynomial degree");
  BasisPolynomial out;
  if (degree == 0) {
    out.coefficients = Eigen::VectorXd::Ones(1);
    return out;
  }
  if (moments.size() < 2 * degree)
    throw Error(ErrorCode::Validation, "degree " + std::to_string(degree) + " needs moments up to order " +
                                           std::to_string(2 * degree - 1));
  const int n = degree + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < degree; ++i)
    for (int l = 0; l < n; ++l) a(i, l) = moments[i + l];
  a(degree, degree) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[degree] = 1.0;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  out.condition_number = sv[n - 1] > 0.0 ? sv[0] / sv[n - 1] : std::numeric_limits<double>::infinity();
  if (!(out.condition_number < 1e13))
    throw Error(ErrorCode::SingularMomentMatrix,
                "moment matrix for degree " + std::to_string(degree) + " is singular (condition number " +
                    std::to_string(out.condition_number) + ")");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  out.coefficients = lu.solve(rhs);
  out.coefficients[degree] = 1.0;
  return out;
}

double UnivariateBasis::eval(int degree, double x) const {
  const auto& c = degrees[degree].coefficients;
  double v = 0.0;
  for (Eigen::Index l = c.size() - 1; l >= 0; --l) v = v * x + c[l];
  return v;
}

Eigen::MatrixXd UnivariateBasis::table(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out(x.size(), degrees.size());
  for (std::size_t d = 0; d < degrees.size(); ++d) {
    const auto& c = degrees[d].coefficients;
    Eigen::ArrayXd v = Eigen::ArrayXd::Constant(x.size(), c[c.size() - 1]);
    for (Eigen::Index l = c.size() - 2; l >= 0; --l) v = v * x.array() + c[l];
    out.col(d) = v.matrix();
  }
  return out;
}

std::vector<UnivariateBasis> build_bases(const MomentTable& table) {
  std::vector<UnivariateBasis> out(table.moments.cols());
  for (Eigen::Index j = 0; j < table.moments.cols(); ++j) {
    try {
      for (int d = 0; d <= table.order; ++d) out[j].degrees.push_back(univariate_basis(table.moments.col(j), d));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularMomentMatrix) throw;
      const std::string what = e.what();
      const auto cut = what.find(": ");
      throw Error(ErrorCode::SingularMomentMatrix, "dimension " + std::to_string(j) + ": " + what.substr(cut + 2));
    }
  }
  return out;
}

}  // namespace ebcs::pce
