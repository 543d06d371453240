#include "xtc/hungarian.hpp"

#include <cmath>
#include <limits>

#include "xtc/error.hpp"

namespace xtc {

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InputError("CostMatrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

std::vector<std::pair<std::size_t, std::size_t>> Assignment::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r]) out.emplace_back(r, *row_to_col[r]);
  }
  return out;
}

namespace {

// Requires n <= m. Returns, for each row, its assigned column.
std::vector<std::size_t> solve_wide(std::size_t n, std::size_t m,
                                    const auto& at /* (row, col) -> cost, 0-based */) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const CostMatrix& cost) {
  const std::size_t rows = cost.rows(), cols = cost.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!std::isfinite(cost(r, c))) {
        throw InputError("solve_assignment: non-finite cost at (" + std::to_string(r) + ", " +
                         std::to_string(c) + ")");
      }
    }
  }
  Assignment out;
  out.row_to_col.assign(rows, std::nullopt);
  if (rows == 0 || cols == 0) return out;

  if (rows <= cols) {
    auto rc = solve_wide(rows, cols, [&](std::size_t r, std::size_t c) { return cost(r, c); });
    for (std::size_t r = 0; r < rows; ++r) out.row_to_col[r] = rc[r];
  } else {
    auto cr = solve_wide(cols, rows, [&](std::size_t c, std::size_t r) { return cost(r, c); });
    for (std::size_t c = 0; c < cols; ++c) out.row_to_col[cr[c]] = c;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (out.row_to_col[r]) out.total_cost += cost(r, *out.row_to_col[r]);
  }
  return out;
}

}  // namespace xtc
