#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace permll {

using Vec = std::vector<double>;
using ClassIndex = std::size_t;  // 0-based inside the library; 1-based in files and docs

// Row-major dense matrix. Only what the classifiers and the dense permutation
// oracle need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  Vec multiply(std::span<const double> v) const;
  Matrix multiply(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l1_norm(std::span<const double> v);
double max_abs(std::span<const double> v);
bool all_finite(std::span<const double> v);

// Throws DomainError unless every entry is finite.
void require_finite(std::span<const double> v, const char* what);

// Throws DomainError unless v lies on the probability simplex
// (entries >= -tol, sum within tol of 1).
void require_prob_vec(std::span<const double> v, const char* what, double tol = 1e-9);
bool is_prob_vec(std::span<const double> v, double tol = 1e-9);

// Numerically stable softmax (max-subtracted).
Vec softmax(std::span<const double> z);

// J_S(z) v with (J_S)_ij = S_i (delta_ij - S_j). J_S is symmetric, so this is
// also the vector-Jacobian product.
Vec softmax_jacobian_vec(std::span<const double> z, std::span<const double> v);

// Same product, given s = softmax(z) already.
Vec softmax_jacobian_vec_from_probs(std::span<const double> s, std::span<const double> v);

// p_max - p_min.
double confidence(std::span<const double> p);

std::size_t argmax(std::span<const double> v);

using ScalarFn = std::function<double(std::span<const double>)>;

inline constexpr double kDefaultFdStep = 1e-6;

// Central differences (f(z + h e_i) - f(z - h e_i)) / 2h. Throws OracleError
// if f returns a non-finite value.
Vec finite_difference_grad(const ScalarFn& f, std::span<const double> z, double h = kDefaultFdStep);

// Largest coordinate error scaled by max(1, |reference|_inf). Used as the
// "relative error" in all gradient checks.
double gradient_mismatch(std::span<const double> analytic, std::span<const double> reference);

}  // namespace permll
