#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace xtc {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  CostMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

struct Assignment {
  std::vector<std::optional<std::size_t>> row_to_col;  // nullopt for unassigned rows
  double total_cost = 0.0;

  /// (row, col) pairs in row order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
};

/// Minimum-cost assignment of min(rows, cols) pairs (Hungarian method with
/// shortest augmenting paths, O(n^2 m)). Deterministic: among equally cheap
/// augmentations the lowest column index wins. Throws InputError on NaN or
/// infinite entries.
Assignment solve_assignment(const CostMatrix& cost);

}  // namespace xtc
