#include <algorithm>
#include <cmath>

#include "ebcs/pce.hpp"

namespace ebcs::pce {

using Pairs = std::vector<std::pair<int, int>>;

std::vector<std::pair<int, int>> IndexSet::term(std::size_t k) const {
  Pairs out;
  for (auto i = offsets[k]; i < offsets[k + 1]; ++i) out.emplace_back(dim[i], degree[i]);
  return out;
}

std::vector<int> IndexSet::dense(std::size_t k) const {
  std::vector<int> out(dims, 0);
  for (auto i = offsets[k]; i < offsets[k + 1]; ++i) out[dim[i]] = degree[i];
  return out;
}

int IndexSet::total_degree(std::size_t k) const {
  int s = 0;
  for (auto i = offsets[k]; i < offsets[k + 1]; ++i) s += degree[i];
  return s;
}

double q_norm(const std::vector<int>& beta, double q) {
  double s = 0.0;
  for (int b : beta)
    if (b > 0) s += std::pow(static_cast<double>(b), q);
  return std::pow(s, 1.0 / q);
}

namespace {

struct Enumerator {
  int dims;
  int order;
  double q;
  double budget_tol;
  std::size_t cap;
  std::vector<double> cost;
  std::vector<int> caps;
  std::vector<Pairs> terms;
  Pairs current;

  void run(int first_dim, double remaining) {
    if (terms.size() >= cap)
      throw Error(ErrorCode::SizeLimit, "index set exceeds " + std::to_string(cap) + " terms");
    terms.push_back(current);
    for (int j = first_dim; j < dims; ++j)
      for (int d = 1; d <= caps[j]; ++d) {
        if (cost[d] > remaining + budget_tol) break;
        current.emplace_back(j, d);
        run(j + 1, remaining - cost[d]);
        current.pop_back();
      }
  }
};

int degree_sum(const Pairs& p) {
  int s = 0;
  for (const auto& [j, d] : p) s += d;
  return s;
}

/// True when a precedes b: lower total degree, then larger dense vector lexicographically.
bool precedes(const Pairs& a, const Pairs& b) {
  const int da = degree_sum(a), db = degree_sum(b);
  if (da != db) return da < db;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].first != b[i].first) return a[i].first < b[i].first;
    if (a[i].second != b[i].second) return a[i].second > b[i].second;
  }
  return a.size() > b.size();
}

}  // namespace

IndexSet build_index_set(int dims, int order, double q, std::size_t size_cap, const std::vector<int>& degree_caps) {
  if (dims < 1) throw Error(ErrorCode::Validation, "index set needs at least one dimension");
  if (order < 0) throw Error(ErrorCode::Validation, "polynomial order must be nonnegative");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::Validation, "q must lie in (0, 1]");

  if (!degree_caps.empty() && static_cast<int>(degree_caps.size()) != dims)
    throw Error(ErrorCode::DimensionMismatch, "degree caps must have one entry per dimension");
  Enumerator e{dims, order, q, 0.0, size_cap, {}, {}, {}, {}};
  e.caps.resize(dims);
  for (int j = 0; j < dims; ++j) e.caps[j] = degree_caps.empty() ? order : std::clamp(degree_caps[j], 0, order);
  const double budget = std::pow(static_cast<double>(order), q);
  e.budget_tol = 1e-12 * std::max(1.0, budget);
  e.cost.resize(order + 1);
  for (int d = 0; d <= order; ++d) e.cost[d] = std::pow(static_cast<double>(d), q);
  e.run(0, budget);
  std::sort(e.terms.begin(), e.terms.end(), precedes);

  IndexSet set;
  set.dims = dims;
  set.order = order;
  set.q = q;
  set.degree_caps = degree_caps;
  set.offsets.reserve(e.terms.size() + 1);
  for (const auto& t : e.terms) {
    for (const auto& [j, d] : t) {
      set.dim.push_back(j);
      set.degree.push_back(d);
    }
    set.offsets.push_back(static_cast<std::int64_t>(set.dim.size()));
  }
  return set;
}

}  // namespace ebcs::pce
