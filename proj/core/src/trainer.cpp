#include "permll/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "permll/errors.hpp"

namespace permll {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kCalibrationStream = 3;
constexpr std::size_t kCalibrationSamples = 20000;

Vec one_hot(std::size_t classes, ClassIndex y) {
  Vec e(classes, 0.0);
  e[y] = 1.0;
  return e;
}

std::string describe(std::span<const double> v) {
  std::ostringstream out;
  out.precision(6);
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ']';
  return out.str();
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::permute_prediction: return "permute_prediction";
    case Variant::permute_label: return "permute_label";
    case Variant::plain_ce: return "plain_ce";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "permute_prediction") return Variant::permute_prediction;
  if (name == "permute_label") return Variant::permute_label;
  if (name == "plain_ce" || name == "plain_ce_baseline") return Variant::plain_ce;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected permute_prediction, permute_label or plain_ce)");
}

void TrainConfig::validate(std::size_t classes) const {
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(eta_alpha >= 0.0)) throw ConfigError("train.eta_alpha must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train.lr_decay must lie in (0, 1]");
  for (std::size_t i = 1; i < milestones.size(); ++i)
    if (milestones[i] <= milestones[i - 1])
      throw ConfigError("train.milestones must be strictly increasing");
  const double lo = 1.0 / static_cast<double>(classes);
  if (variant != Variant::plain_ce && !(i_alpha > lo && i_alpha < 1.0))
    throw ConfigError("train.i_alpha = " + std::to_string(i_alpha) + " must lie in (1/c, 1) = (" +
                      std::to_string(lo) + ", 1)");
  if (model.arch == Arch::mlp && model.hidden == 0)
    throw ConfigError("model.hidden must be positive");
}

double TrainConfig::lr_at(std::size_t epoch) const {
  const auto passed = std::count_if(milestones.begin(), milestones.end(),
                                    [epoch](std::size_t m) { return m <= epoch; });
  return lr * std::pow(lr_decay, static_cast<double>(passed));
}

double TrainConfig::eta_alpha_at(std::size_t epoch) const {
  return couple_alpha_schedule ? eta_alpha * lr_at(epoch) / lr : eta_alpha;
}

std::string TrainConfig::fingerprint() const {
  std::ostringstream s;
  s.precision(17);
  s << to_string(variant) << '|' << to_string(loss) << '|' << to_string(model.arch) << '|'
    << model.hidden << '|' << epochs << '|' << batch_size << '|' << lr << '|';
  for (auto m : milestones) s << m << ',';
  s << '|' << lr_decay << '|' << momentum << '|' << weight_decay << '|' << eta_alpha << '|'
    << i_alpha << '|' << seed << '|' << couple_alpha_schedule;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BatchResult batch_loss_and_grads(Variant variant, const LossFn& loss_fn, const Classifier& model,
                                 const AlphaTable& alpha, const NoisyDataset& data,
                                 std::span<const std::size_t> batch) {
  if (batch.empty()) throw DomainError("batch_loss_and_grads: empty batch");
  const std::size_t c = model.classes();
  const double scale = 1.0 / static_cast<double>(batch.size());
  BatchResult result;
  result.grads = model.zeros_like();
  result.stats.reserve(batch.size());
  if (variant != Variant::plain_ce) result.alpha_grads.reserve(batch.size());

  for (std::size_t i : batch) {
    if (i >= data.size()) throw DomainError("batch_loss_and_grads: sample index out of range");
    const ClassIndex y = data.noisy_labels[i];
    const ForwardPass pass = forward_pass(model, data.features.row(i));
    const Vec& f = pass.probs;

    double sample_loss = 0.0;
    Vec upstream;
    Vec a_grad;
    switch (variant) {
      case Variant::permute_prediction: {
        const Vec mix = softmax(alpha.row(i));
        const Vec permuted = mix_apply(mix, y, f);
        const Vec target = one_hot(c, y);
        sample_loss = loss(loss_fn, permuted, target);
        const Vec g_out = grad_p(loss_fn, permuted, target);
        upstream = mix_apply(mix, y, g_out);
        a_grad = grad_alpha_from_mix(mix, y, f, g_out);
        break;
      }
      case Variant::permute_label: {
        const Vec target = apply_to_label(alpha.row(i), y);
        sample_loss = loss(loss_fn, f, target);
        upstream = grad_p(loss_fn, f, target);
        a_grad = softmax_jacobian_vec_from_probs(target, grad_q(loss_fn, f, target));
        break;
      }
      case Variant::plain_ce: {
        const Vec target = one_hot(c, y);
        sample_loss = loss(loss_fn, f, target);
        upstream = grad_p(loss_fn, f, target);
        break;
      }
    }
    if (!std::isfinite(sample_loss))
      throw TrainingError("non-finite loss at sample " + std::to_string(i) + " (noisy label " +
                          std::to_string(y + 1) + "), prediction " + describe(f) +
                          ", alpha " + describe(alpha.row(i)));

    result.loss += sample_loss * scale;
    accumulate_backward(model, pass, upstream, scale, result.grads);
    SampleStat stat{confidence(f), 0.0};
    if (variant != Variant::plain_ce) {
      stat.alpha_grad_l1 = l1_norm(a_grad);
      for (double& g : a_grad) g *= scale;
      result.alpha_grads.push_back({i, std::move(a_grad)});
    }
    result.stats.push_back(stat);
  }
  if (!std::isfinite(result.loss) || !result.grads.all_finite())
    throw TrainingError("non-finite batch loss or gradient");
  return result;
}

void sgd_step(Classifier& model, const GradientSet& grads, const SgdParams& params,
              GradientSet& velocity) {
  auto& layers = model.layers();
  if (grads.layers.size() != layers.size() || velocity.layers.size() != layers.size())
    throw DomainError("sgd_step: shape mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weight.flat();
    auto gw = grads.layers[l].weight.flat();
    auto vw = velocity.layers[l].weight.flat();
    if (gw.size() != w.size() || vw.size() != w.size()) throw DomainError("sgd_step: shape mismatch");
    for (std::size_t k = 0; k < w.size(); ++k) {
      vw[k] = params.momentum * vw[k] + (gw[k] + params.weight_decay * w[k]);
      w[k] -= params.lr * vw[k];
    }
    auto& b = layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    auto& vb = velocity.layers[l].bias;
    for (std::size_t k = 0; k < b.size(); ++k) {
      vb[k] = params.momentum * vb[k] + gb[k];
      b[k] -= params.lr * vb[k];
    }
  }
}

void alpha_step(AlphaTable& table, std::span<const AlphaGrad> grads, double eta_alpha) {
  for (const auto& g : grads) {
    if (g.index >= table.samples() || g.grad.size() != table.classes())
      throw DomainError("alpha_step: gradient does not match the table");
    auto row = table.row(g.index);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= eta_alpha * g.grad[j];
  }
}

double accuracy(const Classifier& model, const Matrix& features,
                std::span<const ClassIndex> labels) {
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predict(model, features.row(i)) == labels[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

Trainer::Trainer(TrainConfig config, const TrainData& data)
    : config_(std::move(config)),
      data_(&data),
      loss_fn_(make_loss(config_.loss)),
      rng_(Rng::derive_seed(config_.seed, kShuffleStream)) {
  const NoisyDataset& train = data.train;
  if (train.size() == 0) throw ConfigError("training set is empty");
  config_.validate(train.classes);
  if (config_.variant == Variant::permute_prediction) {
    Rng calib(Rng::derive_seed(config_.seed, kCalibrationStream));
    loss_fn_ = calibrate_grad_bound(loss_fn_, train.classes, kCalibrationSamples, calib);
  }
  Rng init(Rng::derive_seed(config_.seed, kInitStream));
  model_ = init_params(config_.model, train.dims(), train.classes, init);
  velocity_ = model_.zeros_like();
  // plain_ce never reads alpha; I_alpha may be outside (1/c, 1) there.
  alpha_ = config_.variant == Variant::plain_ce
               ? AlphaTable(train.classes, train.noisy_labels)
               : init_alpha(train.noisy_labels, config_.i_alpha, train.classes);

  report_.variant = std::string(to_string(config_.variant));
  report_.loss = std::string(to_string(config_.loss));
  report_.config_hash = config_.fingerprint();
  report_.classes = train.classes;
  report_.train_samples = train.size();
  report_.grad_bound_M = loss_fn_.grad_bound_M;
  report_.grad_bound_empirical = loss_fn_.grad_bound_empirical;
  if (train.clean_known && config_.variant != Variant::plain_ce)
    report_.initial_perm_accuracy = permutation_accuracy(alpha_, train.clean_labels);
}

EpochRecord Trainer::run_epoch() {
  if (finished()) throw TrainingError("run_epoch: training already finished");
  const NoisyDataset& train = data_->train;
  const std::size_t n = train.size();
  const double c = static_cast<double>(train.classes);

  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  rec.lr = config_.lr_at(epoch_);
  rec.eta_alpha = config_.eta_alpha_at(epoch_);
  const SgdParams sgd{rec.lr, config_.momentum, config_.weight_decay};
  const bool tally_prop4 =
      config_.variant == Variant::permute_prediction && loss_fn_.grad_bound_M.has_value();
  const double bound_scale = tally_prop4 ? c * *loss_fn_.grad_bound_M / 4.0 : 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(order);

  double loss_sum = 0.0;
  double conf_sum = 0.0;
  double grad_sum = 0.0;
  for (std::size_t start = 0; start < n; start += config_.batch_size) {
    const std::size_t stop = std::min(n, start + config_.batch_size);
    const std::span<const std::size_t> batch(order.data() + start, stop - start);
    // Both gradients come from the same pre-update parameters.
    const BatchResult br =
        batch_loss_and_grads(config_.variant, loss_fn_, model_, alpha_, train, batch);
    sgd_step(model_, br.grads, sgd, velocity_);
    if (config_.variant != Variant::plain_ce) alpha_step(alpha_, br.alpha_grads, rec.eta_alpha);

    loss_sum += br.loss * static_cast<double>(batch.size());
    for (const SampleStat& s : br.stats) {
      conf_sum += s.confidence;
      grad_sum += s.alpha_grad_l1;
      if (tally_prop4 && s.confidence < 1.0 / c) {
        ++rec.low_conf_samples;
        const double bound = bound_scale * s.confidence;
        if (s.alpha_grad_l1 > bound + 1e-9) ++rec.prop4_violations;
        if (bound > 0.0) rec.prop4_max_ratio = std::max(rec.prop4_max_ratio, s.alpha_grad_l1 / bound);
      }
    }
  }
  rec.train_loss = loss_sum / static_cast<double>(n);
  rec.mean_confidence = conf_sum / static_cast<double>(n);
  rec.mean_alpha_grad_l1 = grad_sum / static_cast<double>(n);

  if (data_->validation.size() > 0)
    rec.val_accuracy =
        accuracy(model_, data_->validation.features, data_->validation.noisy_labels);
  if (data_->test) rec.test_accuracy = accuracy(model_, data_->test->features, data_->test->labels);
  if (train.clean_known && config_.variant != Variant::plain_ce)
    rec.perm_accuracy = permutation_accuracy(alpha_, train.clean_labels);

  ++epoch_;
  report_.epochs.push_back(rec);
  return rec;
}

RunReport Trainer::run() {
  try {
    while (!finished()) run_epoch();
  } catch (const TrainingError& e) {
    report_.status = "diverged";
    report_.error = e.what();
  }
  return report_;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.config_hash = config_.fingerprint();
  ck.epoch = epoch_;
  ck.rng = rng_.state();
  ck.model = model_;
  ck.velocity = velocity_;
  ck.alpha = alpha_;
  ck.report = report_;
  return ck;
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.config_hash != config_.fingerprint())
    throw ConfigError("checkpoint config hash " + ckpt.config_hash +
                      " does not match the current config " + config_.fingerprint());
  if (!(ckpt.model.spec() == model_.spec()) || ckpt.model.input_dim() != model_.input_dim() ||
      ckpt.model.classes() != model_.classes())
    throw ConfigError("checkpoint model shape does not match");
  if (ckpt.alpha.samples() != alpha_.samples() || ckpt.alpha.classes() != alpha_.classes() ||
      ckpt.alpha.noisy_labels() != alpha_.noisy_labels())
    throw ConfigError("checkpoint permutation table does not match the training set");
  epoch_ = ckpt.epoch;
  rng_ = Rng(ckpt.rng);
  model_ = ckpt.model;
  velocity_ = ckpt.velocity;
  alpha_ = ckpt.alpha;
  report_ = ckpt.report;
}

RunReport train(const TrainConfig& config, const TrainData& data) {
  Trainer trainer(config, data);
  return trainer.run();
}

std::vector<SweepCell> sweep(const TrainConfig& base, const TrainData& data,
                             std::span<const double> eta_alpha_grid,
                             std::span<const double> i_alpha_grid, std::size_t jobs) {
  if (eta_alpha_grid.empty() || i_alpha_grid.empty())
    throw ConfigError("sweep grids must be non-empty");
  std::vector<SweepCell> cells;
  for (double eta : eta_alpha_grid)
    for (double ia : i_alpha_grid) {
      SweepCell cell;
      cell.eta_alpha = eta;
      cell.i_alpha = ia;
      cell.seed = base.seed + cells.size();
      cells.push_back(cell);
    }

  auto run_cell = [&](SweepCell& cell) {
    TrainConfig cfg = base;
    cfg.eta_alpha = cell.eta_alpha;
    cfg.i_alpha = cell.i_alpha;
    cfg.seed = cell.seed;
    try {
      const RunReport report = train(cfg, data);
      cell.initial_perm_accuracy = report.initial_perm_accuracy;
      if (const EpochRecord* last = report.final_epoch()) {
        cell.perm_accuracy = last->perm_accuracy;
        cell.test_accuracy = last->test_accuracy;
      }
      cell.ok = report.ok();
      cell.error = report.error;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (jobs == 1) {
    for (auto& cell : cells) run_cell(cell);
  } else {
    // Cells are independent; worker w takes cells w, w + jobs, ...
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&, w] {
        for (std::size_t k = w; k < cells.size(); k += jobs) run_cell(cells[k]);
      });
  }
  return cells;
}

}  // namespace permll
