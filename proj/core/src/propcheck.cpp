#include "permll/propcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "permll/errors.hpp"
#include "permll/perm_layer.hpp"

namespace permll {
namespace {

Vec one_hot(std::size_t classes, ClassIndex y) {
  Vec e(classes, 0.0);
  e[y] = 1.0;
  return e;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::string render(std::span<const double> v) {
  std::ostringstream out;
  out.precision(10);
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ']';
  return out.str();
}

void add_fault(Vec& g, double fault) {
  if (fault != 0.0)
    for (double& x : g) x += fault;
}

// Analytic alpha-gradient (plus any injected fault) checked against central
// differences of the objective. Returns the mismatch.
double validate_gradient(Variant variant, const LossFn& fn, std::span<const double> alpha,
                         std::span<const double> f, ClassIndex y, double fault) {
  Vec analytic = inner_gradient(variant, fn, alpha, f, y);
  add_fault(analytic, fault);
  const Vec numeric = finite_difference_grad(
      [&](std::span<const double> a) { return inner_objective(variant, fn, a, f, y); }, alpha);
  return gradient_mismatch(analytic, numeric);
}

void record_violation(PropReport& report, const std::string& witness) {
  if (report.violations++ == 0) report.witness = witness;
}

void finish(PropReport& report) {
  if (report.verdict.empty()) report.verdict = report.violations == 0 ? "pass" : "fail";
}

// Per-swap loss sensitivities G_i = (u_y - u_i)(f_i - f_y), u = dl/dp at P f.
// The alpha-gradient is s * (G - s.G); the search direction drops the
// leading s, a diagonal preconditioning that lets vanishing swap weights
// decay geometrically instead of like 1/t.
Vec descent_direction(const LossFn& fn, std::span<const double> alpha,
                      std::span<const double> f, ClassIndex y) {
  const PermApplyResult r = apply_to_vec(alpha, y, f);
  const Vec u = grad_p(fn, r.output, one_hot(alpha.size(), y));
  Vec d(alpha.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (u[y] - u[i]) * (f[i] - f[y]);
  const double mean = dot(r.mix, d);
  for (double& v : d) v = mean - v;
  return d;
}

// Preconditioned gradient descent with Armijo backtracking. Steps grow after
// every accepted move so directions that saturate the mix (optimum on the
// simplex boundary) are followed geometrically fast.
InnerSolveResult descend(const LossFn& fn, std::span<const double> f, ClassIndex y, Vec alpha,
                         const InnerSolveOptions& options) {
  const Variant v = Variant::permute_prediction;
  InnerSolveResult r;
  double value = inner_objective(v, fn, alpha, f, y);
  r.initial_loss = value;
  Vec g = inner_gradient(v, fn, alpha, f, y);
  double gn = l2_norm(g);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < options.max_iterations && gn >= options.tolerance; ++it) {
    const Vec d = descent_direction(fn, alpha, f, y);
    const double slope = dot(g, d);
    if (!(slope < 0.0)) break;
    bool moved = false;
    while (step > 1e-30) {
      Vec trial = alpha;
      for (std::size_t j = 0; j < trial.size(); ++j) trial[j] += step * d[j];
      const double tv = inner_objective(v, fn, trial, f, y);
      bool accept = tv <= value + 1e-4 * step * slope;
      Vec tg;
      if (!accept && tv <= value) {
        // The decrease is below the resolution of the loss; keep going as long
        // as the gradient shrinks.
        tg = inner_gradient(v, fn, trial, f, y);
        accept = l2_norm(tg) < gn;
      }
      if (accept) {
        alpha = std::move(trial);
        value = tv;
        g = tg.empty() ? inner_gradient(v, fn, alpha, f, y) : std::move(tg);
        gn = l2_norm(g);
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  r.alpha_star = std::move(alpha);
  r.loss = value;
  r.grad_norm = gn;
  r.iterations = it;
  r.converged = gn < options.tolerance;
  return r;
}

// Dense solve with partial pivoting; false when singular.
bool solve_linear(std::vector<Vec> a, Vec b, Vec& x) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
    if (!(std::abs(a[piv][k]) > 0.0)) return false;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double m = a[r][k] / a[k][k];
      for (std::size_t cc = k; cc < n; ++cc) a[r][cc] -= m * a[k][cc];
      b[r] -= m * b[k];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    double acc = b[k];
    for (std::size_t cc = k + 1; cc < n; ++cc) acc -= a[k][cc] * x[cc];
    x[k] = acc / a[k][k];
  }
  return true;
}

// Newton steps on the coordinates that still carry mix weight, with a Hessian
// from central differences of the analytic gradient. Used when first-order
// descent stalls on a face of the simplex (interior optimum in some swaps).
// A step is kept only if it lowers the gradient norm without raising the loss
// beyond rounding.
void newton_polish(const LossFn& fn, std::span<const double> f, ClassIndex y, InnerSolveResult& r,
                   const InnerSolveOptions& options) {
  const Variant v = Variant::permute_prediction;
  Vec& alpha = r.alpha_star;
  Vec g = inner_gradient(v, fn, alpha, f, y);
  double gn = l2_norm(g);
  for (int it = 0; it < 60 && gn >= options.tolerance; ++it) {
    const Vec s = softmax(alpha);
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[j] > 1e-14) active.push_back(j);
    const std::size_t n = active.size();
    std::vector<Vec> h(n, Vec(n, 0.0));
    const double step = 1e-5;
    for (std::size_t k = 0; k < n; ++k) {
      Vec ap = alpha, am = alpha;
      ap[active[k]] += step;
      am[active[k]] -= step;
      const Vec gp = inner_gradient(v, fn, ap, f, y);
      const Vec gm = inner_gradient(v, fn, am, f, y);
      for (std::size_t j = 0; j < n; ++j) h[j][k] = (gp[active[j]] - gm[active[j]]) / (2.0 * step);
    }
    double trace = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) h[j][k] = h[k][j] = 0.5 * (h[j][k] + h[k][j]);
      trace += std::abs(h[j][j]);
    }
    // The objective is flat along the all-ones direction of the active block.
    const double ridge = 1e-10 * std::max(trace, 1e-300);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) h[j][k] += ridge;
    Vec rhs(n), delta;
    for (std::size_t j = 0; j < n; ++j) rhs[j] = -g[active[j]];
    if (!solve_linear(h, rhs, delta)) break;
    bool moved = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      Vec trial = alpha;
      for (std::size_t j = 0; j < n; ++j) trial[active[j]] += t * delta[j];
      const Vec tg = inner_gradient(v, fn, trial, f, y);
      const double tv = inner_objective(v, fn, trial, f, y);
      if (l2_norm(tg) < gn && tv <= r.loss + 1e-14 * std::max(1.0, r.loss)) {
        alpha = std::move(trial);
        g = tg;
        gn = l2_norm(g);
        r.loss = std::min(r.loss, tv);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  r.loss = inner_objective(v, fn, alpha, f, y);
  r.grad_norm = gn;
  r.converged = gn < options.tolerance;
}

}  // namespace

double PropReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw DomainError("PropReport: no metric '" + key + "'");
}

double inner_objective(Variant variant, const LossFn& fn, std::span<const double> alpha,
                       std::span<const double> prediction, ClassIndex y) {
  switch (variant) {
    case Variant::permute_label:
      return loss(fn, prediction, apply_to_label(alpha, y));
    case Variant::permute_prediction:
      return loss(fn, apply_to_vec(alpha, y, prediction).output, one_hot(alpha.size(), y));
    case Variant::plain_ce:
      break;
  }
  throw DomainError("inner_objective: plain_ce has no permutation parameters");
}

Vec inner_gradient(Variant variant, const LossFn& fn, std::span<const double> alpha,
                   std::span<const double> prediction, ClassIndex y) {
  switch (variant) {
    case Variant::permute_label: {
      const Vec s = apply_to_label(alpha, y);
      return softmax_jacobian_vec_from_probs(s, grad_q(fn, prediction, s));
    }
    case Variant::permute_prediction: {
      const PermApplyResult r = apply_to_vec(alpha, y, prediction);
      const Vec upstream = grad_p(fn, r.output, one_hot(alpha.size(), y));
      return grad_alpha_from_mix(r.mix, y, prediction, upstream);
    }
    case Variant::plain_ce:
      break;
  }
  throw DomainError("inner_gradient: plain_ce has no permutation parameters");
}

InnerSolveResult solve_inner_alpha(Variant variant, const LossFn& fn,
                                   std::span<const double> prediction, ClassIndex y,
                                   const InnerSolveOptions& options) {
  require_prob_vec(prediction, "solve_inner_alpha");
  const std::size_t c = prediction.size();
  if (y >= c) throw DomainError("solve_inner_alpha: label out of range");

  if (variant == Variant::permute_label) {
    for (double p : prediction)
      if (!(p > 0.0)) throw DomainError("solve_inner_alpha: prediction must be interior");
    InnerSolveResult r;
    r.alpha_star.resize(c);
    for (std::size_t j = 0; j < c; ++j) r.alpha_star[j] = std::log(prediction[j]);
    const Vec s = softmax(r.alpha_star);
    for (std::size_t j = 0; j < c; ++j)
      if (std::abs(s[j] - prediction[j]) > 1e-10)
        throw DomainError("solve_inner_alpha: closed form failed to reproduce the prediction");
    r.initial_loss = inner_objective(variant, fn, Vec(c, 0.0), prediction, y);
    r.loss = inner_objective(variant, fn, r.alpha_star, prediction, y);
    r.grad_norm = l2_norm(inner_gradient(variant, fn, r.alpha_star, prediction, y));
    r.converged = true;
    return r;
  }
  if (variant != Variant::permute_prediction)
    throw DomainError("solve_inner_alpha: plain_ce has no permutation parameters");

  Rng rng(options.seed);
  InnerSolveResult best;
  bool have = false;
  const std::size_t runs = std::max<std::size_t>(1, options.restarts);
  for (std::size_t k = 0; k < runs; ++k) {
    Vec start(c, 0.0);
    if (k > 0)
      for (double& a : start) a = rng.normal(0.0, 2.0);
    // First-order descent finds the active face quickly; Newton finishes it.
    InnerSolveOptions first = options;
    first.max_iterations = std::min<std::size_t>(options.max_iterations, 5000);
    InnerSolveResult r = descend(fn, prediction, y, std::move(start), first);
    if (!r.converged) newton_polish(fn, prediction, y, r, options);
    if (!r.converged && options.max_iterations > first.max_iterations) {
      const std::size_t used = r.iterations;
      InnerSolveOptions rest = options;
      rest.max_iterations = options.max_iterations - used;
      const double start_loss = r.initial_loss;
      r = descend(fn, prediction, y, std::move(r.alpha_star), rest);
      r.initial_loss = start_loss;
      r.iterations += used;
      if (!r.converged) newton_polish(fn, prediction, y, r, options);
    }
    if (!have || r.loss < best.loss) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

PredictionCase draw_prediction_case(Rng& rng, std::size_t min_classes, std::size_t max_classes) {
  PredictionCase pc;
  pc.classes = min_classes + static_cast<std::size_t>(rng.uniform_index(max_classes - min_classes + 1));
  Vec z(pc.classes);
  for (double& v : z) v = rng.normal();
  pc.prediction = softmax(z);
  pc.label = static_cast<ClassIndex>(rng.uniform_index(pc.classes));
  return pc;
}

PropReport check_prop1(const CheckOptions& options) {
  PropReport report;
  report.name = "prop1";
  report.loss = "-";
  Rng rng(options.seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::size_t c = options.min_classes +
                          rng.uniform_index(options.max_classes - options.min_classes + 1);
    Vec alpha(c);
    const double spread = rng.uniform(0.1, 10.0);
    for (double& a : alpha) a = rng.normal(0.0, spread);
    const ClassIndex y = rng.uniform_index(c);
    const Vec permuted = apply_to_label(alpha, y);
    const Vec s = softmax(alpha);
    double err = 0.0;
    for (std::size_t j = 0; j < c; ++j) err = std::max(err, std::abs(permuted[j] - s[j]));
    worst = std::max(worst, err);
    if (err > 1e-12) record_violation(report, "alpha=" + render(alpha) + " y=" + std::to_string(y + 1));
  }
  report.trials = options.trials;
  report.metrics = {{"max_abs_error", worst}};
  finish(report);
  return report;
}

PropReport check_prop2(const LossFn& fn, const CheckOptions& options) {
  PropReport report;
  report.name = "prop2";
  report.loss = std::string(to_string(fn.kind));
  report.trials = options.trials;
  if (!fn.satisfies_assumption1) {
    report.verdict = "skipped";
    report.note = "loss does not satisfy l(p, q) = 0 iff p = q for soft targets";
    return report;
  }
  Rng rng(options.seed);
  Rng probe(Rng::derive_seed(options.seed, 1));
  double max_residual = 0.0;
  double max_mismatch = 0.0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const PredictionCase pc = draw_prediction_case(rng, options.min_classes, options.max_classes);
    const InnerSolveResult r = solve_inner_alpha(Variant::permute_label, fn, pc.prediction, pc.label);
    max_residual = std::max(max_residual, r.loss);
    Vec a(pc.classes);
    for (double& v : a) v = probe.normal();
    const double mm = validate_gradient(Variant::permute_label, fn, a, pc.prediction, pc.label,
                                        options.gradient_fault);
    max_mismatch = std::max(max_mismatch, mm);
    if (r.loss > 1e-9)
      record_violation(report, "trial " + std::to_string(t) + ": residual " +
                                   std::to_string(r.loss) + " for f=" + render(pc.prediction));
    else if (mm > options.fd_tolerance)
      record_violation(report, "trial " + std::to_string(t) +
                                   ": analytic gradient disagrees with finite differences (" +
                                   std::to_string(mm) + ")");
  }
  report.metrics = {{"max_residual", max_residual}, {"max_fd_mismatch", max_mismatch}};
  finish(report);
  return report;
}

PropReport check_prop3(const LossFn& fn, const CheckOptions& options) {
  PropReport report;
  report.name = "prop3";
  report.loss = std::string(to_string(fn.kind));
  report.trials = options.trials;
  // The target here is the one-hot e_y, where CE(p, e_y) = 0 iff p = e_y.
  Rng rng(options.seed);
  double min_loss = std::numeric_limits<double>::infinity();
  double max_gap = -std::numeric_limits<double>::infinity();
  double max_mismatch = 0.0;
  std::size_t unconverged = 0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const PredictionCase pc = draw_prediction_case(rng, options.min_classes, options.max_classes);
    InnerSolveOptions so;
    so.seed = Rng::derive_seed(options.seed, 1000 + t);
    const InnerSolveResult r =
        solve_inner_alpha(Variant::permute_prediction, fn, pc.prediction, pc.label, so);
    if (!r.converged) ++unconverged;
    const Vec permuted = apply_to_vec(r.alpha_star, pc.label, pc.prediction).output;
    const double fmax = *std::max_element(pc.prediction.begin(), pc.prediction.end());
    const double gap = permuted[pc.label] - fmax;  // must be <= 0
    min_loss = std::min(min_loss, r.loss);
    max_gap = std::max(max_gap, gap);
    const double mm = validate_gradient(Variant::permute_prediction, fn, Vec(pc.classes, 0.0),
                                        pc.prediction, pc.label, options.gradient_fault);
    max_mismatch = std::max(max_mismatch, mm);
    if (!(r.loss > 0.0))
      record_violation(report, "trial " + std::to_string(t) + ": inner loss reached 0 for f=" +
                                   render(pc.prediction));
    else if (gap > 1e-9)
      record_violation(report, "trial " + std::to_string(t) + ": [P f]_y exceeds max f by " +
                                   std::to_string(gap));
    else if (mm > options.fd_tolerance)
      record_violation(report, "trial " + std::to_string(t) +
                                   ": analytic gradient disagrees with finite differences (" +
                                   std::to_string(mm) + ")");
  }
  report.metrics = {{"min_inner_loss", min_loss},
                    {"max_label_entry_minus_fmax", max_gap},
                    {"max_fd_mismatch", max_mismatch},
                    {"unconverged_solves", static_cast<double>(unconverged)}};
  finish(report);
  return report;
}

PropReport check_prop4_bound(const LossFn& base, const CheckOptions& options,
                             std::span<const std::size_t> class_counts) {
  PropReport report;
  report.name = "prop4";
  report.loss = std::string(to_string(base.kind));
  Rng rng(options.seed);
  double tightest = 0.0;
  double max_mismatch = 0.0;
  double max_zero_conf_grad = 0.0;
  bool empirical = false;
  for (std::size_t c : class_counts) {
    LossFn fn = base;
    if (!fn.grad_bound_M || (fn.grad_bound_classes != 0 && fn.grad_bound_classes != c)) {
      Rng calib(Rng::derive_seed(options.seed, 7000 + c));
      fn = calibrate_grad_bound(fn, c, 50000, calib);
    }
    empirical = empirical || fn.grad_bound_empirical;
    const double M = *fn.grad_bound_M;
    report.metrics.emplace_back("M_c" + std::to_string(c), M);
    for (std::size_t t = 0; t < options.trials; ++t) {
      const ClassIndex y = rng.uniform_index(c);
      Vec f = rng.bernoulli(0.05) ? Vec(c, 1.0 / static_cast<double>(c))
                                  : sample_low_confidence(c, rng);
      Vec alpha(c);
      const double spread = rng.uniform(0.1, 5.0);
      for (double& a : alpha) a = rng.normal(0.0, spread);
      if (rng.bernoulli(0.1)) alpha[rng.uniform_index(c)] += 40.0;  // saturated mix
      const double conf = confidence(f);
      if (!(conf < 1.0 / static_cast<double>(c))) continue;
      ++report.trials;
      Vec g = inner_gradient(Variant::permute_prediction, fn, alpha, f, y);
      add_fault(g, options.gradient_fault);
      const double norm = l1_norm(g);
      const double bound = static_cast<double>(c) * M / 4.0 * conf;
      if (bound > 0.0) tightest = std::max(tightest, norm / bound);
      if (conf == 0.0) max_zero_conf_grad = std::max(max_zero_conf_grad, norm);
      const double mm = validate_gradient(Variant::permute_prediction, fn, alpha, f, y,
                                          options.gradient_fault);
      max_mismatch = std::max(max_mismatch, mm);
      if (norm > bound + 1e-9)
        record_violation(report, "c=" + std::to_string(c) + " alpha=" + render(alpha) +
                                     " f=" + render(f) + ": |grad|_1=" + std::to_string(norm) +
                                     " > bound " + std::to_string(bound));
      else if (mm > options.fd_tolerance)
        record_violation(report, "c=" + std::to_string(c) +
                                     ": analytic gradient disagrees with finite differences (" +
                                     std::to_string(mm) + ")");
    }
  }
  report.note = empirical ? "empirical-M" : "analytic-M";
  report.metrics.emplace_back("tightest_ratio", tightest);
  report.metrics.emplace_back("max_fd_mismatch", max_mismatch);
  report.metrics.emplace_back("max_grad_at_zero_confidence", max_zero_conf_grad);
  finish(report);
  return report;
}

std::vector<CurvePoint> figure2_curves(const LossFn& fn, Variant variant,
                                       std::span<const Vec> alpha_samples,
                                       std::span<const double> p1_grid, double gradient_fault) {
  std::vector<CurvePoint> points;
  for (std::size_t k = 0; k < alpha_samples.size(); ++k) {
    const Vec& alpha = alpha_samples[k];
    if (alpha.size() != 2) throw DomainError("figure2_curves: alphas must have 2 entries");
    for (double p1 : p1_grid) {
      if (!(p1 > 0.0 && p1 < 1.0)) throw DomainError("figure2_curves: p1 must lie in (0, 1)");
      const Vec p{p1, 1.0 - p1};
      Vec g = inner_gradient(variant, fn, alpha, p, 0);
      add_fault(g, gradient_fault);
      CurvePoint pt;
      pt.variant = std::string(to_string(variant));
      pt.loss = std::string(to_string(fn.kind));
      pt.alpha_id = k;
      pt.p1 = p1;
      pt.grad_l1 = l1_norm(g);
      pt.fd_mismatch = validate_gradient(variant, fn, alpha, p, 0, gradient_fault);
      points.push_back(std::move(pt));
    }
  }
  return points;
}

std::vector<double> default_p1_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
  return grid;
}

std::vector<Vec> sample_figure2_alphas(std::size_t count, Rng& rng) {
  std::vector<Vec> alphas;
  alphas.push_back({0.0, 0.0});  // S(alpha) = [0.5, 0.5]
  while (alphas.size() < count) alphas.push_back({rng.normal(0.0, 1.5), rng.normal(0.0, 1.5)});
  return alphas;
}

Figure2Result check_figure2(const CheckOptions& options, std::size_t alpha_count) {
  Figure2Result out;
  PropReport& report = out.report;
  report.name = "fig2";
  report.loss = "squared_l2,kl_divergence";
  Rng rng(options.seed);
  const std::vector<Vec> alphas = sample_figure2_alphas(alpha_count, rng);
  const std::vector<double> grid = default_p1_grid();

  double max_pred_at_half = 0.0;
  double min_label_at_half = std::numeric_limits<double>::infinity();
  double max_label_at_target = 0.0;
  double max_mismatch = 0.0;
  for (LossKind kind : {LossKind::squared_l2, LossKind::kl_divergence}) {
    const LossFn fn = make_loss(kind);
    for (Variant variant : {Variant::permute_label, Variant::permute_prediction}) {
      auto pts = figure2_curves(fn, variant, alphas, grid, options.gradient_fault);
      for (const auto& pt : pts) {
        max_mismatch = std::max(max_mismatch, pt.fd_mismatch);
        if (pt.fd_mismatch > options.fd_tolerance)
          record_violation(report, pt.variant + "/" + pt.loss + " alpha " +
                                       std::to_string(pt.alpha_id) + " p1=" +
                                       std::to_string(pt.p1) + ": finite-difference mismatch " +
                                       std::to_string(pt.fd_mismatch));
        if (pt.p1 != 0.5) continue;
        const Vec s = softmax(alphas[pt.alpha_id]);
        if (variant == Variant::permute_prediction) {
          max_pred_at_half = std::max(max_pred_at_half, pt.grad_l1);
          if (pt.grad_l1 > 1e-12)
            record_violation(report, "permute_prediction gradient " + std::to_string(pt.grad_l1) +
                                         " at p=[0.5, 0.5], alpha " + std::to_string(pt.alpha_id));
        } else if (std::abs(s[0] - 0.5) > 0.1) {
          min_label_at_half = std::min(min_label_at_half, pt.grad_l1);
          if (!(pt.grad_l1 > 1e-3))
            record_violation(report, "permute_label gradient vanishes at p=[0.5, 0.5] for alpha " +
                                         std::to_string(pt.alpha_id));
        }
      }
      if (variant == Variant::permute_label) {
        // Stationary exactly where the prediction equals the soft label.
        for (std::size_t k = 0; k < alphas.size(); ++k) {
          const Vec s = softmax(alphas[k]);
          Vec g = inner_gradient(variant, fn, alphas[k], s, 0);
          add_fault(g, options.gradient_fault);
          const double n = l1_norm(g);
          max_label_at_target = std::max(max_label_at_target, n);
          if (n > 1e-12)
            record_violation(report, "permute_label gradient " + std::to_string(n) +
                                         " at p = S(alpha), alpha " + std::to_string(k));
        }
      }
      out.points.insert(out.points.end(), pts.begin(), pts.end());
    }
  }
  report.trials = out.points.size();
  report.metrics = {{"max_pred_grad_at_half", max_pred_at_half},
                    {"min_label_grad_at_half", min_label_at_half},
                    {"max_label_grad_at_target", max_label_at_target},
                    {"max_fd_mismatch", max_mismatch}};
  finish(report);
  return out;
}

std::string figure2_csv(std::span<const CurvePoint> points) {
  std::ostringstream out;
  out << "variant,loss,alpha_id,p1,grad_l1\n";
  char buf[32];
  for (const auto& pt : points) {
    out << pt.variant << ',' << pt.loss << ',' << pt.alpha_id << ',';
    std::snprintf(buf, sizeof buf, "%.17g", pt.p1);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", pt.grad_l1);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace permll
