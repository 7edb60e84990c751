#pragma once

#include <gtest/gtest.h>

#include "vcc/matrix.hpp"
#include "vcc/rng.hpp"

namespace vcc::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev = 1.0) {
  return rng.gaussian_matrix<double>(rows, cols, stddev);
}

inline ::testing::AssertionResult near(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return ::testing::AssertionFailure() << "shapes " << a.shape() << " vs " << b.shape();
  }
  const double diff = max_abs_diff(a, b);
  if (diff <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "max abs diff " << diff << " exceeds " << tol;
}

}  // namespace vcc::testing
