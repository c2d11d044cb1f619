#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebcs/error.hpp"

namespace ebcs::pce {

/// Per-dimension affine map to zero mean and unit (population) standard deviation.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  std::vector<bool> frozen;
  /// Original column index of every retained dimension, ascending.
  std::vector<int> active_dims;

  int input_dims() const { return static_cast<int>(mean.size()); }
  int active_count() const { return static_cast<int>(active_dims.size()); }
  /// Maps raw inputs (M x input_dims) to the retained standardized columns.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
};

struct Standardized {
  Eigen::MatrixXd values;
  Standardization params;
};

/// Columns with std below `frozen_tol` are frozen and dropped; ALL_FROZEN if none remain.
Standardized standardize(const Eigen::MatrixXd& samples, double frozen_tol = 1e-12);

/// moments(s, j) = mean of z_j^s for s = 0 .. 2H-1.
struct MomentTable {
  int order = 0;
  Eigen::MatrixXd moments;
};

MomentTable raw_moments(const Eigen::MatrixXd& standardized, int order);

struct BasisPolynomial {
  /// Monomial coefficients, lowest power first; the last entry is exactly 1.
  Eigen::VectorXd coefficients;
  double condition_number = 1.0;
};

/// Monic orthogonal polynomial of `degree` from raw moments mu_0 .. mu_{2 degree - 1}.
/// SINGULAR_MOMENT_MATRIX when the moment system is numerically rank deficient.
BasisPolynomial univariate_basis(const Eigen::VectorXd& moments, int degree);

/// Polynomials of degree 0 .. H for one dimension.
struct UnivariateBasis {
  std::vector<BasisPolynomial> degrees;

  int order() const { return static_cast<int>(degrees.size()) - 1; }
  double eval(int degree, double x) const;
  /// Values of every degree at every x: rows = x, cols = degree.
  Eigen::MatrixXd table(const Eigen::VectorXd& x) const;
};

std::vector<UnivariateBasis> build_bases(const MomentTable& table);

/// Multi-indices with ||beta||_q <= H, stored sparsely: term k owns the (dimension, degree)
/// pairs in [offsets[k], offsets[k+1]), dimensions ascending and degrees positive.
/// Order: total degree ascending, then lexicographically descending on the dense vector.
struct IndexSet {
  int dims = 0;
  int order = 0;
  double q = 1.0;
  /// Optional per-dimension degree limits; empty means `order` everywhere.
  std::vector<int> degree_caps;
  std::vector<std::int64_t> offsets{0};
  std::vector<int> dim;
  std::vector<int> degree;

  std::size_t size() const { return offsets.size() - 1; }
  std::vector<std::pair<int, int>> term(std::size_t k) const;
  std::vector<int> dense(std::size_t k) const;
  int total_degree(std::size_t k) const;
  int max_degree(int j) const { return degree_caps.empty() ? order : std::min(order, degree_caps[j]); }
};

constexpr std::size_t kDefaultIndexCap = 1000000;

/// SIZE_LIMIT when the set would exceed `size_cap`.
IndexSet build_index_set(int dims, int order, double q, std::size_t size_cap = kDefaultIndexCap,
                         const std::vector<int>& degree_caps = {});
double q_norm(const std::vector<int>& beta, double q);

/// Psi_beta evaluated on standardized rows; held densely when it fits `dense_budget` entries and
/// rebuilt block by block otherwise. Columns are scaled to unit Euclidean norm.
class Design {
 public:
  Design(const Eigen::MatrixXd& standardized, const IndexSet& set, const std::vector<UnivariateBasis>& bases,
         std::size_t dense_budget = 50'000'000);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(set_.size()); }
  bool dense() const { return dense_; }
  /// Euclidean norm of each unscaled column.
  const Eigen::VectorXd& scales() const { return scales_; }
  /// Scaled column k.
  Eigen::VectorXd column(Eigen::Index k) const;
  /// Scaled columns transposed times v.
  Eigen::VectorXd correlate(const Eigen::VectorXd& v) const;
  /// Weighted squared norms of the scaled columns: sum_m w_m c_km^2.
  Eigen::VectorXd weighted_sq_norms(const Eigen::VectorXd& w) const;
  /// Full scaled matrix; materializes it when held lazily.
  Eigen::MatrixXd matrix() const;

 private:
  void fill_block(Eigen::Index first, Eigen::Index count, Eigen::MatrixXd& out) const;
  template <typename F>
  void for_blocks(F&& f) const;

  Eigen::Index rows_ = 0;
  IndexSet set_;
  std::vector<Eigen::MatrixXd> tables_;
  Eigen::VectorXd scales_;
  Eigen::MatrixXd scaled_;
  bool dense_ = false;
};

/// Unscaled Psi matrix (M x |A|), convenience for small problems.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& standardized, const IndexSet& set,
                              const std::vector<UnivariateBasis>& bases);

struct OmpOptions {
  /// 0 means min(training rows / 3, |A|).
  int max_terms = 0;
  double target_resid = 1e-6;
  double val_fraction = 0.2;
  double min_r2_gain = 1e-4;
  /// Consecutive iterations without the minimum R^2 gain before stopping.
  int patience = 3;
};

struct OmpResult {
  /// Indices into the design columns, in selection order.
  std::vector<Eigen::Index> active;
  /// Coefficients on the unscaled columns.
  Eigen::VectorXd coefficients;
  std::vector<double> residual_history;
  std::vector<double> r2_history;
  double residual_norm = 0.0;
  double validation_r2 = 0.0;
  int iterations = 0;
  std::string stop_reason;
  bool degenerate = false;
};

/// Greedy sparse least squares. A constant response yields the constant term alone.
OmpResult omp_fit(const Design& design, const Eigen::VectorXd& y, const OmpOptions& options = {});

struct FitOptions {
  int order = 3;
  double q = 1.0;
  OmpOptions omp;
  std::size_t index_cap = kDefaultIndexCap;
  std::size_t dense_budget = 50'000'000;
};

struct ActiveTerm {
  /// Position in the index set ordering.
  std::int64_t index = 0;
  /// (retained dimension, degree) pairs.
  std::vector<std::pair<int, int>> beta;
  double coefficient = 0.0;
};

struct FitDiagnostics {
  double residual_norm = 0.0;
  double relative_residual = 0.0;
  double validation_r2 = 0.0;
  int active_size = 0;
  int iterations = 0;
  std::int64_t index_set_size = 0;
  int training_rows = 0;
  int max_terms = 0;
  std::string stop_reason;
  bool degenerate = false;
  double max_condition_number = 1.0;
  std::vector<double> residual_history;
};

struct PceModel {
  static constexpr const char* kFormat = "ebcs.pce";
  static constexpr int kFormatVersion = 1;

  Standardization standardization;
  int order = 0;
  double q = 1.0;
  std::vector<UnivariateBasis> bases;
  std::vector<ActiveTerm> terms;
  FitDiagnostics diagnostics;

  int input_dims() const { return standardization.input_dims(); }
  std::string to_json() const;
  static PceModel from_json(const std::string& text);
};

/// Standardize, build moments, bases and index set, then run OMP on (inputs, y).
PceModel fit_pce(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& y, const FitOptions& options = {});

/// Raw inputs (M x input_dims) -> predictions; DIMENSION_MISMATCH on width.
Eigen::VectorXd surrogate_eval(const PceModel& model, const Eigen::MatrixXd& inputs);

struct Histogram {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<long> counts;

  double bin_width() const { return counts.empty() ? 0.0 : (upper - lower) / counts.size(); }
};

struct Stats {
  long count = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1).
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  Histogram histogram;
};

/// Linear interpolation between order statistics at rank p/100 * (n - 1).
double percentile(std::vector<double> values, double p);
double compensated_sum(const Eigen::VectorXd& values);
/// EMPTY on an empty vector.
Stats surrogate_stats(const Eigen::VectorXd& values, int bins = 40);

}  // namespace ebcs::pce
