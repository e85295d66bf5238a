#include "permll/model.hpp"

#include <cmath>
#include <string>

#include "permll/errors.hpp"

namespace permll {
namespace {

DenseLayer make_layer(std::size_t out, std::size_t in) { return {Matrix(out, in), Vec(out, 0.0)}; }

std::vector<DenseLayer> layer_shapes(const ModelSpec& spec, std::size_t m, std::size_t c) {
  std::vector<DenseLayer> layers;
  if (spec.arch == Arch::linear) {
    layers.push_back(make_layer(c, m));
  } else {
    layers.push_back(make_layer(spec.hidden, m));
    layers.push_back(make_layer(c, spec.hidden));
  }
  return layers;
}

template <typename Layers, typename Span>
std::vector<Span> collect_blocks(Layers& layers) {
  std::vector<Span> out;
  for (auto& layer : layers) out.emplace_back(layer.weight.flat());
  for (auto& layer : layers) out.emplace_back(layer.bias);
  return out;
}

}  // namespace

std::string_view to_string(Arch arch) { return arch == Arch::linear ? "linear" : "mlp"; }

Arch parse_arch(std::string_view name) {
  if (name == "linear") return Arch::linear;
  if (name == "mlp") return Arch::mlp;
  throw ConfigError("unknown model arch '" + std::string(name) + "' (expected linear or mlp)");
}

void GradientSet::set_zero() {
  for (auto& layer : layers) {
    for (double& w : layer.weight.flat()) w = 0.0;
    for (double& b : layer.bias) b = 0.0;
  }
}

void GradientSet::add_scaled(const GradientSet& other, double scale) {
  auto dst = blocks();
  auto src = other.blocks();
  if (dst.size() != src.size()) throw DomainError("GradientSet: shape mismatch");
  for (std::size_t b = 0; b < dst.size(); ++b) {
    if (dst[b].size() != src[b].size()) throw DomainError("GradientSet: shape mismatch");
    for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += scale * src[b][i];
  }
}

bool GradientSet::all_finite() const {
  for (auto block : blocks())
    if (!permll::all_finite(block)) return false;
  return true;
}

std::vector<std::span<double>> GradientSet::blocks() {
  return collect_blocks<std::vector<DenseLayer>, std::span<double>>(layers);
}
std::vector<std::span<const double>> GradientSet::blocks() const {
  return collect_blocks<const std::vector<DenseLayer>, std::span<const double>>(layers);
}

Classifier::Classifier(ModelSpec spec, std::size_t input_dim, std::size_t classes)
    : spec_(spec), input_dim_(input_dim), classes_(classes) {
  if (input_dim == 0) throw DomainError("Classifier: input dimension must be positive");
  if (classes < 2) throw DomainError("Classifier: need at least 2 classes");
  if (spec.arch == Arch::mlp && spec.hidden == 0)
    throw DomainError("Classifier: mlp hidden width must be positive");
  layers_ = layer_shapes(spec, input_dim, classes);
}

std::vector<std::span<double>> Classifier::blocks() {
  return collect_blocks<std::vector<DenseLayer>, std::span<double>>(layers_);
}
std::vector<std::span<const double>> Classifier::blocks() const {
  return collect_blocks<const std::vector<DenseLayer>, std::span<const double>>(layers_);
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (auto block : blocks()) n += block.size();
  return n;
}

GradientSet Classifier::zeros_like() const { return {layer_shapes(spec_, input_dim_, classes_)}; }

ForwardPass forward_pass(const Classifier& model, std::span<const double> x) {
  if (x.size() != model.input_dim())
    throw DomainError("forward: expected " + std::to_string(model.input_dim()) +
                      " features, got " + std::to_string(x.size()));
  require_finite(x, "forward");
  ForwardPass pass;
  Vec act(x.begin(), x.end());
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vec z = layers[l].weight.multiply(act);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers[l].bias[i];
    pass.inputs.push_back(std::move(act));
    if (l + 1 < layers.size()) {
      act = z;
      for (double& a : act) a = a > 0.0 ? a : 0.0;
    }
    pass.preacts.push_back(std::move(z));
  }
  pass.probs = softmax(pass.preacts.back());
  return pass;
}

Vec forward(const Classifier& model, std::span<const double> x) {
  return forward_pass(model, x).probs;
}

std::size_t predict(const Classifier& model, std::span<const double> x) {
  // argmax of the logits equals argmax of the softmax and skips the exp.
  return argmax(forward_pass(model, x).preacts.back());
}

void accumulate_backward(const Classifier& model, const ForwardPass& pass,
                         std::span<const double> upstream, double scale, GradientSet& grads) {
  if (upstream.size() != model.classes()) throw DomainError("backward: upstream size mismatch");
  const auto& layers = model.layers();
  Vec delta = softmax_jacobian_vec_from_probs(pass.probs, upstream);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Vec& in = pass.inputs[l];
    DenseLayer& g = grads.layers[l];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      const double d = scale * delta[r];
      g.bias[r] += d;
      auto grow = g.weight.row(r);
      for (std::size_t k = 0; k < in.size(); ++k) grow[k] += d * in[k];
    }
    if (l == 0) break;
    const Matrix& w = layers[l].weight;
    const Vec& below = pass.preacts[l - 1];
    Vec next(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const auto wrow = w.row(r);
      for (std::size_t k = 0; k < w.cols(); ++k) next[k] += wrow[k] * delta[r];
    }
    // ReLU; the subgradient at 0 is taken as 0.
    for (std::size_t k = 0; k < next.size(); ++k)
      if (!(below[k] > 0.0)) next[k] = 0.0;
    delta = std::move(next);
  }
}

GradientSet backward(const Classifier& model, std::span<const double> x,
                     std::span<const double> upstream) {
  require_finite(upstream, "backward");
  const ForwardPass pass = forward_pass(model, x);
  GradientSet grads = model.zeros_like();
  accumulate_backward(model, pass, upstream, 1.0, grads);
  return grads;
}

Classifier init_params(ModelSpec spec, std::size_t input_dim, std::size_t classes, Rng& rng) {
  Classifier model(spec, input_dim, classes);
  for (auto& layer : model.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (double& w : layer.weight.flat()) w = rng.uniform(-bound, bound);
  }
  return model;
}

}  // namespace permll
