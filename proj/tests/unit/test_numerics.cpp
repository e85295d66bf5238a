#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "permll/errors.hpp"
#include "permll/numerics.hpp"
#include "permll/rng.hpp"

namespace permll {
namespace {

using testing::draw_classes;
using testing::draw_logits;
using testing::draw_vec;

TEST(Softmax, Examples) {
  const Vec a = softmax(Vec{0.0, 0.0});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);

  const Vec b = softmax(Vec{1000.0, 1000.0, 1000.0});
  for (double v : b) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  const Vec c = softmax(Vec{std::log(2.0), 0.0, 0.0});
  const Vec ref = testing::softmax_ref(Vec{std::log(2.0), 0.0, 0.0});
  EXPECT_NEAR(c[0], 0.5, 1e-15);
  EXPECT_NEAR(c[1], 0.25, 1e-15);
  EXPECT_NEAR(c[2], 0.25, 1e-15);
  EXPECT_LE(testing::max_abs_diff(c, ref), 1e-15);
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(Vec{0.0, std::numeric_limits<double>::quiet_NaN()}), DomainError);
  EXPECT_THROW(softmax(Vec{std::numeric_limits<double>::infinity(), 0.0}), DomainError);
}

TEST(Softmax, PropertyValidProbVec) {
  Rng rng(11);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t c = draw_classes(rng, 2, 12);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 3.0));
    const Vec z = draw_vec(rng, c, scale);
    const Vec s = softmax(z);
    double sum = 0.0;
    for (double v : s) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LE(testing::max_abs_diff(s, testing::softmax_ref(z)), 1e-14);
  }
}

TEST(Softmax, PropertyShiftInvariance) {
  Rng rng(12);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = draw_classes(rng, 2, 10);
    Vec z = draw_logits(rng, c, 3.0);
    const Vec s = softmax(z);
    const double shift = rng.uniform(-500.0, 500.0);
    for (double& v : z) v += shift;
    EXPECT_LE(testing::max_abs_diff(softmax(z), s), 1e-12);
  }
}

TEST(SoftmaxJacobian, Examples) {
  const Vec a = softmax_jacobian_vec(Vec{0.0, 0.0}, Vec{1.0, 0.0});
  EXPECT_NEAR(a[0], 0.25, 1e-15);
  EXPECT_NEAR(a[1], -0.25, 1e-15);

  const Vec b = softmax_jacobian_vec(Vec{0.0, 0.0, 0.0}, Vec{1.0, 0.0, 0.0});
  EXPECT_NEAR(b[0], 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(b[1], -1.0 / 9.0, 1e-15);
  EXPECT_NEAR(b[2], -1.0 / 9.0, 1e-15);

  // Finite-difference oracle for the first example.
  const auto fd = testing::fd_ref([](std::span<const double> z) { return softmax(z)[0]; },
                                  Vec{0.0, 0.0});
  EXPECT_NEAR(fd[0], 0.25, 1e-9);
  EXPECT_NEAR(fd[1], -0.25, 1e-9);
}

TEST(SoftmaxJacobian, AllOnesGivesZero) {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = draw_classes(rng, 2, 10);
    const Vec z = draw_logits(rng, c, 4.0);
    const Vec r = softmax_jacobian_vec(z, Vec(c, 1.0));
    for (double v : r) EXPECT_NEAR(v, 0.0, 1e-15);
  }
}

TEST(SoftmaxJacobian, PropertyMatchesFiniteDifferences) {
  Rng rng(14);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = draw_classes(rng, 2, 8);
    const Vec z = draw_logits(rng, c, 2.0);
    const Vec v = draw_vec(rng, c, 2.0);
    const Vec analytic = softmax_jacobian_vec(z, v);
    double sum = 0.0;
    for (double x : analytic) sum += x;
    EXPECT_NEAR(sum, 0.0, 1e-12);
    const auto fd = testing::fd_ref(
        [&](std::span<const double> zz) {
          const Vec s = softmax(zz);
          return dot(s, v);
        },
        z);
    EXPECT_LE(testing::rel_error(analytic, fd), 1e-5);
  }
}

TEST(FiniteDifference, Examples) {
  const Vec z{0.3, -1.2, 2.0};
  const Vec e1 = finite_difference_grad([](std::span<const double> x) { return x[0]; }, z);
  EXPECT_NEAR(e1[0], 1.0, 1e-9);
  EXPECT_NEAR(e1[1], 0.0, 1e-12);
  EXPECT_NEAR(e1[2], 0.0, 1e-12);

  const Vec zero = finite_difference_grad([](std::span<const double>) { return 4.2; }, z);
  for (double v : zero) EXPECT_EQ(v, 0.0);

  // Softmax cross-entropy at z = [0, 0], target e_1: gradient S(z) - e_1.
  const Vec ce = finite_difference_grad(
      [](std::span<const double> x) { return -std::log(softmax(x)[0]); }, Vec{0.0, 0.0});
  EXPECT_NEAR(ce[0], -0.5, 1e-6);
  EXPECT_NEAR(ce[1], 0.5, 1e-6);
}

TEST(FiniteDifference, NonFiniteIsOracleError) {
  EXPECT_THROW(finite_difference_grad([](std::span<const double> x) { return std::log(x[0]); },
                                      Vec{0.0}),
               OracleError);
}

TEST(FiniteDifference, MismatchIsScaled) {
  EXPECT_NEAR(gradient_mismatch(Vec{1.1, 0.0}, Vec{1.0, 0.0}), 0.1, 1e-15);
  EXPECT_NEAR(gradient_mismatch(Vec{110.0}, Vec{100.0}), 0.1, 1e-15);
  EXPECT_NEAR(gradient_mismatch(Vec{1e-3}, Vec{0.0}), 1e-3, 1e-18);
}

TEST(Confidence, Examples) {
  EXPECT_DOUBLE_EQ(confidence(Vec(4, 0.25)), 0.0);
  EXPECT_DOUBLE_EQ(confidence(Vec{0.0, 1.0, 0.0}), 1.0);
  EXPECT_NEAR(confidence(Vec{0.6, 0.3, 0.1}), 0.5, 1e-15);
}

TEST(ProbVec, Validation) {
  EXPECT_TRUE(is_prob_vec(Vec{0.5, 0.5}));
  EXPECT_FALSE(is_prob_vec(Vec{0.6, 0.5}));
  EXPECT_FALSE(is_prob_vec(Vec{1.5, -0.5}));
  EXPECT_THROW(require_prob_vec(Vec{0.2, 0.2}, "t"), DomainError);
}

TEST(MatrixOps, MultiplyAndIdentity) {
  Matrix m(2, 3);
  m(0, 0) = 1; m(0, 1) = 2; m(0, 2) = 3;
  m(1, 0) = -1; m(1, 1) = 0; m(1, 2) = 4;
  const Vec r = m.multiply(Vec{1.0, 1.0, 2.0});
  EXPECT_EQ(r, (Vec{9.0, 7.0}));
  EXPECT_EQ(m.multiply(Matrix::identity(3)), m);
  EXPECT_EQ(Matrix::identity(2).multiply(m), m);
}

TEST(Rng, EngineMatchesStandardSequence) {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, EqualSeedsGiveIdenticalDraws) {
  Rng a(77), b(77);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.uniform01(), b.uniform01());
    ASSERT_EQ(a.normal(), b.normal());
    ASSERT_EQ(a.uniform_index(17), b.uniform_index(17));
  }
}

TEST(Rng, StateRestoresPosition) {
  Rng a(123);
  for (int i = 0; i < 37; ++i) a.normal();
  Rng b(a.state());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DistributionsInRange) {
  Rng rng(5);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    ASSERT_LT(rng.uniform_index(7), 7u);
  }
  // Mean of U(0,1): sd of the mean is 1/sqrt(12 n).
  EXPECT_NEAR(sum / n, 0.5, 4.0 / std::sqrt(12.0 * n));
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  EXPECT_NE(Rng::derive_seed(0, 1), Rng::derive_seed(0, 2));
  EXPECT_NE(Rng::derive_seed(0, 1), Rng::derive_seed(1, 1));
  EXPECT_EQ(Rng::derive_seed(9, 3), Rng::derive_seed(9, 3));
}

}  // namespace
}  // namespace permll
