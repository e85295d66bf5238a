#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "permll/numerics.hpp"
#include "permll/rng.hpp"

namespace permll {

enum class Arch { linear, mlp };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view name);

struct ModelSpec {
  Arch arch = Arch::linear;
  std::size_t hidden = 16;  // mlp only; the activation is ReLU

  bool operator==(const ModelSpec&) const = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vec bias;       // out

  bool operator==(const DenseLayer&) const = default;
};

// Per-parameter arrays with the same shapes as a Classifier. Also used for
// optimizer state (momentum buffers).
struct GradientSet {
  std::vector<DenseLayer> layers;

  void set_zero();
  void add_scaled(const GradientSet& other, double scale);
  bool all_finite() const;
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  bool operator==(const GradientSet&) const = default;
};

// f_theta: R^m -> simplex over c classes with a softmax head.
class Classifier {
 public:
  Classifier() = default;
  Classifier(ModelSpec spec, std::size_t input_dim, std::size_t classes);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t classes() const noexcept { return classes_; }

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  // Weight matrices then bias vectors, layer by layer.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::size_t parameter_count() const;

  GradientSet zeros_like() const;

  bool operator==(const Classifier&) const = default;

 private:
  ModelSpec spec_;
  std::size_t input_dim_ = 0;
  std::size_t classes_ = 0;
  std::vector<DenseLayer> layers_;
};

// Intermediate values of one forward pass, kept for backprop.
struct ForwardPass {
  std::vector<Vec> inputs;  // input to each layer
  std::vector<Vec> preacts;  // pre-activation output of each layer
  Vec probs;
};

ForwardPass forward_pass(const Classifier& model, std::span<const double> x);
Vec forward(const Classifier& model, std::span<const double> x);
std::size_t predict(const Classifier& model, std::span<const double> x);

// Accumulates scale * d(upstream . f(x)) / d(theta) into grads.
void accumulate_backward(const Classifier& model, const ForwardPass& pass,
                         std::span<const double> upstream, double scale, GradientSet& grads);

GradientSet backward(const Classifier& model, std::span<const double> x,
                     std::span<const double> upstream);

// Weights uniform in +-1/sqrt(fan_in), biases zero.
Classifier init_params(ModelSpec spec, std::size_t input_dim, std::size_t classes, Rng& rng);

}  // namespace permll
