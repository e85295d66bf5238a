#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "permll/losses.hpp"
#include "permll/numerics.hpp"
#include "permll/rng.hpp"
#include "permll/trainer.hpp"

namespace permll {

// Inner problem for one sample: minimise over alpha
//   permute_label:      l(f, P_alpha e_y) = l(f, S(alpha))
//   permute_prediction: l(P_alpha f, e_y)
double inner_objective(Variant variant, const LossFn& fn, std::span<const double> alpha,
                       std::span<const double> prediction, ClassIndex y);
Vec inner_gradient(Variant variant, const LossFn& fn, std::span<const double> alpha,
                   std::span<const double> prediction, ClassIndex y);

struct InnerSolveOptions {
  std::size_t restarts = 20;
  double tolerance = 1e-10;  // on |grad|_2
  std::size_t max_iterations = 100000;
  std::uint64_t seed = 0;
};

struct InnerSolveResult {
  Vec alpha_star;
  double loss = 0.0;
  double initial_loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// permute_label uses the closed form alpha* = log(prediction), which needs an
// interior prediction. permute_prediction runs gradient descent with
// backtracking from alpha = 0 and from random starts, keeping the best.
InnerSolveResult solve_inner_alpha(Variant variant, const LossFn& fn,
                                   std::span<const double> prediction, ClassIndex y,
                                   const InnerSolveOptions& options = {});

struct CheckOptions {
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::size_t min_classes = 2;
  std::size_t max_classes = 10;
  // Added to every analytic alpha-gradient before it is validated. Nonzero
  // values exist to prove the self-validation catches a broken gradient.
  double gradient_fault = 0.0;
  double fd_tolerance = 1e-5;
};

struct PropReport {
  std::string name;
  std::string loss;
  std::string verdict;  // pass | fail | skipped
  std::string note;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::string witness;  // first violation, human readable
  std::vector<std::pair<std::string, double>> metrics;

  bool passed() const { return verdict != "fail"; }
  double metric(const std::string& key) const;
};

// Random classification instance: c uniform in [min, max], prediction softmax
// of standard-normal logits, label uniform. The same seed gives the same
// stream to every check.
struct PredictionCase {
  std::size_t classes = 0;
  Vec prediction;
  ClassIndex label = 0;
};
PredictionCase draw_prediction_case(Rng& rng, std::size_t min_classes, std::size_t max_classes);

// P_alpha e_y == S(alpha) on random draws.
PropReport check_prop1(const CheckOptions& options);

// permute_label collapses: residual l(f, P_alpha* e_y) <= 1e-9. Needs l(p, q) = 0 iff p = q.
PropReport check_prop2(const LossFn& fn, const CheckOptions& options);

// permute_prediction does not: l(P_alpha* f, e_y) > 0 and [P_alpha* f]_y <= max_j f_j.
PropReport check_prop3(const LossFn& fn, const CheckOptions& options);

// |grad_alpha l(P_alpha f, e_y)|_1 <= (c M / 4)(f_max - f_min) + 1e-9 on draws
// with f_max - f_min < 1/c, `options.trials` draws per class count.
PropReport check_prop4_bound(const LossFn& fn, const CheckOptions& options,
                             std::span<const std::size_t> class_counts);

struct CurvePoint {
  std::string variant;
  std::string loss;
  std::size_t alpha_id = 0;
  double p1 = 0.0;
  double grad_l1 = 0.0;
  double fd_mismatch = 0.0;
};

// c = 2, noisy label = first class, p = [p1, 1 - p1].
std::vector<CurvePoint> figure2_curves(const LossFn& fn, Variant variant,
                                       std::span<const Vec> alpha_samples,
                                       std::span<const double> p1_grid,
                                       double gradient_fault = 0.0);

std::vector<double> default_p1_grid();
std::vector<Vec> sample_figure2_alphas(std::size_t count, Rng& rng);

struct Figure2Result {
  PropReport report;
  std::vector<CurvePoint> points;
};

// Curves for squared_l2 and kl_divergence under both variants, checked for:
// zero permute_prediction gradient at p = [0.5, 0.5]; permute_label gradient
// zero at p = S(alpha) and above 1e-3 at [0.5, 0.5] when |S(alpha)_1 - 0.5| > 0.1;
// finite-difference agreement everywhere.
Figure2Result check_figure2(const CheckOptions& options, std::size_t alpha_count = 8);

// variant,loss,alpha_id,p1,grad_l1
std::string figure2_csv(std::span<const CurvePoint> points);

}  // namespace permll
