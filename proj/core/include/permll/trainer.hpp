#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permll/data.hpp"
#include "permll/losses.hpp"
#include "permll/model.hpp"
#include "permll/noise.hpp"
#include "permll/perm_layer.hpp"
#include "permll/rng.hpp"

namespace permll {

// permute_prediction: l(P_alpha f(x), e_y)   (default)
// permute_label:      l(f(x), P_alpha e_y) = l(f(x), S(alpha))
// plain_ce:           l(f(x), e_y), alpha unused
enum class Variant { permute_prediction, permute_label, plain_ce };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

struct TrainConfig {
  Variant variant = Variant::permute_prediction;
  LossKind loss = LossKind::cross_entropy;
  ModelSpec model;
  std::size_t epochs = 120;
  std::size_t batch_size = 128;
  double lr = 0.02;
  std::vector<std::size_t> milestones{80, 100};
  double lr_decay = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double eta_alpha = 1.5;
  double i_alpha = 0.35;
  std::uint64_t seed = 0;
  // Apply the model's step schedule to eta_alpha as well. Off by default.
  bool couple_alpha_schedule = false;

  void validate(std::size_t classes) const;  // throws ConfigError
  double lr_at(std::size_t epoch) const;      // epoch is 0-based
  double eta_alpha_at(std::size_t epoch) const;
  // FNV-1a over a canonical rendering of every field, as 16 hex digits.
  std::string fingerprint() const;
};

struct TrainData {
  NoisyDataset train;
  NoisyDataset validation;  // may be empty
  std::optional<Dataset> test;
};

struct AlphaGrad {
  std::size_t index = 0;  // row of the AlphaTable
  Vec grad;
};

struct SampleStat {
  double confidence = 0.0;      // p_max - p_min of f(x)
  double alpha_grad_l1 = 0.0;   // |d l_i / d alpha^i|_1 of the per-sample loss
};

struct BatchResult {
  double loss = 0.0;  // mean over the batch
  GradientSet grads;
  std::vector<AlphaGrad> alpha_grads;  // gradients of the mean loss
  std::vector<SampleStat> stats;
};

// Mean loss of the batch under the chosen variant with gradients for theta
// and for the alpha rows of the batch. Everything is evaluated at the current
// parameters; nothing is updated. Throws TrainingError on a non-finite loss.
BatchResult batch_loss_and_grads(Variant variant, const LossFn& loss_fn, const Classifier& model,
                                 const AlphaTable& alpha, const NoisyDataset& data,
                                 std::span<const std::size_t> batch);

struct SgdParams {
  double lr = 0.02;
  double momentum = 0.0;
  double weight_decay = 0.0;  // weights only, added to the gradient
};

// v <- momentum * v + (g + wd * w);  w <- w - lr * v.
void sgd_step(Classifier& model, const GradientSet& grads, const SgdParams& params,
              GradientSet& velocity);

// alpha^i <- alpha^i - eta * grad for every listed row; other rows untouched.
void alpha_step(AlphaTable& table, std::span<const AlphaGrad> grads, double eta_alpha);

double accuracy(const Classifier& model, const Matrix& features,
                std::span<const ClassIndex> labels);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double eta_alpha = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> test_accuracy;
  std::optional<double> perm_accuracy;
  double mean_confidence = 0.0;
  double mean_alpha_grad_l1 = 0.0;
  // Per-sample check of |grad_alpha l|_1 <= (c M / 4) conf on samples with conf < 1/c.
  std::size_t low_conf_samples = 0;
  std::size_t prop4_violations = 0;
  double prop4_max_ratio = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct RunReport {
  std::string status = "ok";  // ok | diverged
  std::string error;
  std::string variant;
  std::string loss;
  std::string config_hash;
  std::size_t classes = 0;
  std::size_t train_samples = 0;
  std::optional<double> initial_perm_accuracy;
  std::optional<double> grad_bound_M;
  bool grad_bound_empirical = false;
  std::vector<EpochRecord> epochs;
  std::string checkpoint_path;

  bool ok() const { return status == "ok"; }
  const EpochRecord* final_epoch() const { return epochs.empty() ? nullptr : &epochs.back(); }
  bool operator==(const RunReport&) const = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::string config_hash;
  std::size_t epoch = 0;  // completed epochs
  RngState rng;
  Classifier model;
  GradientSet velocity;
  AlphaTable alpha;
  RunReport report;
};

// Joint SGD on theta and alpha. Both are updated from the same forward pass
// of each mini-batch; evaluation never touches the permutation layer.
class Trainer {
 public:
  Trainer(TrainConfig config, const TrainData& data);

  EpochRecord run_epoch();
  // Runs the remaining epochs. A non-finite loss stops the run and marks the
  // report as diverged.
  RunReport run();

  bool finished() const { return epoch_ >= config_.epochs; }
  std::size_t epoch() const { return epoch_; }

  const TrainConfig& config() const { return config_; }
  const Classifier& model() const { return model_; }
  const AlphaTable& alpha() const { return alpha_; }
  AlphaTable& alpha() { return alpha_; }
  const LossFn& loss_fn() const { return loss_fn_; }
  const RunReport& report() const { return report_; }

  Checkpoint checkpoint() const;
  // Throws ConfigError if the checkpoint was written under a different config.
  void restore(const Checkpoint& ckpt);

 private:
  TrainConfig config_;
  const TrainData* data_;
  LossFn loss_fn_;
  Classifier model_;
  GradientSet velocity_;
  AlphaTable alpha_;
  Rng rng_;
  std::size_t epoch_ = 0;
  RunReport report_;
};

RunReport train(const TrainConfig& config, const TrainData& data);

struct SweepCell {
  double eta_alpha = 0.0;
  double i_alpha = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<double> perm_accuracy;
  std::optional<double> initial_perm_accuracy;
  std::optional<double> test_accuracy;
};

// One training run per (eta_alpha, i_alpha) cell, eta-major order. Cell k
// trains with seed = base seed + k. Failed cells are recorded and skipped.
std::vector<SweepCell> sweep(const TrainConfig& base, const TrainData& data,
                             std::span<const double> eta_alpha_grid,
                             std::span<const double> i_alpha_grid, std::size_t jobs = 1);

}  // namespace permll
