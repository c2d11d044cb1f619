#include <algorithm>

#include "ebcs/pce.hpp"

namespace ebcs::pce {

Design::Design(const Eigen::MatrixXd& z, const IndexSet& set, const std::vector<UnivariateBasis>& bases,
               std::size_t dense_budget)
    : rows_(z.rows()), set_(set) {
  if (static_cast<int>(bases.size()) != set.dims || z.cols() != set.dims)
    throw Error(ErrorCode::DimensionMismatch, "design inputs, bases and index set disagree on dimension");
  tables_.reserve(bases.size());
  for (std::size_t j = 0; j < bases.size(); ++j) {
    if (bases[j].order() < set.max_degree(static_cast<int>(j)))
      throw Error(ErrorCode::Validation, "basis for dimension " + std::to_string(j) + " is below the index set order");
    tables_.push_back(bases[j].table(z.col(j)));
  }

  scales_ = Eigen::VectorXd::Ones(cols());
  Eigen::VectorXd norms(cols());
  for_blocks([&](Eigen::Index first, const Eigen::MatrixXd& block) {
    norms.segment(first, block.cols()) = block.colwise().norm().transpose();
  });
  // An identically zero column keeps scale 1 and stays zero.
  scales_ = (norms.array() > 0.0).select(norms, 1.0);

  dense_ = static_cast<std::size_t>(rows_) * set_.size() <= dense_budget;
  if (dense_) {
    scaled_.resize(rows_, cols());
    for_blocks([&](Eigen::Index first, const Eigen::MatrixXd& block) { scaled_.middleCols(first, block.cols()) = block; });
  }
}

void Design::fill_block(Eigen::Index first, Eigen::Index count, Eigen::MatrixXd& out) const {
  out.resize(rows_, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const auto k = static_cast<std::size_t>(first + c);
    auto col = out.col(c);
    col.setOnes();
    for (auto i = set_.offsets[k]; i < set_.offsets[k + 1]; ++i)
      col.array() *= tables_[set_.dim[i]].col(set_.degree[i]).array();
  }
}

template <typename F>
void Design::for_blocks(F&& f) const {
  const Eigen::Index width = std::max<Eigen::Index>(1, 4'000'000 / std::max<Eigen::Index>(1, rows_));
  Eigen::MatrixXd block;
  for (Eigen::Index first = 0; first < cols(); first += width) {
    const Eigen::Index count = std::min(width, cols() - first);
    fill_block(first, count, block);
    block.array().rowwise() /= scales_.segment(first, count).transpose().array();
    f(first, static_cast<const Eigen::MatrixXd&>(block));
  }
}

Eigen::VectorXd Design::column(Eigen::Index k) const {
  if (dense_) return scaled_.col(k);
  Eigen::MatrixXd block;
  fill_block(k, 1, block);
  return block.col(0) / scales_[k];
}

Eigen::VectorXd Design::correlate(const Eigen::VectorXd& v) const {
  if (dense_) return scaled_.transpose() * v;
  Eigen::VectorXd out(cols());
  for_blocks([&](Eigen::Index first, const Eigen::MatrixXd& block) {
    out.segment(first, block.cols()).noalias() = block.transpose() * v;
  });
  return out;
}

Eigen::VectorXd Design::weighted_sq_norms(const Eigen::VectorXd& w) const {
  if (dense_) return (scaled_.array().square().colwise() * w.array()).colwise().sum().transpose();
  Eigen::VectorXd out(cols());
  for_blocks([&](Eigen::Index first, const Eigen::MatrixXd& block) {
    out.segment(first, block.cols()) = (block.array().square().colwise() * w.array()).colwise().sum().transpose();
  });
  return out;
}

Eigen::MatrixXd Design::matrix() const {
  if (dense_) return scaled_;
  Eigen::MatrixXd out(rows_, cols());
  for_blocks([&](Eigen::Index first, const Eigen::MatrixXd& block) { out.middleCols(first, block.cols()) = block; });
  return out;
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& z, const IndexSet& set, const std::vector<UnivariateBasis>& bases) {
  Design d(z, set, bases, static_cast<std::size_t>(-1));
  return d.matrix() * d.scales().asDiagonal();
}

}  // namespace ebcs::pce
