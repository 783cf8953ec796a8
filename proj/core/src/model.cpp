#include "uss/model.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <string>

#include "uss/error.hpp"

namespace uss {
namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

void check_layers(const std::vector<DenseLayer>& layers) {
  if (layers.empty()) throw Error(ErrorCode::kInvalidConfig, "network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0 ||
        layer.bias.size() != layer.weights.rows()) {
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) + " is malformed");
    }
    if (l > 0 && layer.weights.cols() != layers[l - 1].weights.rows()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(l) + " input does not match previous output");
    }
  }
}

}  // namespace

EmbeddingNet::EmbeddingNet(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)), generation_(next_generation()) {
  check_layers(layers_);
}

EmbeddingNet EmbeddingNet::he_initialized(std::span<const int> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw Error(ErrorCode::kInvalidConfig, "need at least two layer sizes");
  for (int s : sizes) {
    if (s < 1) throw Error(ErrorCode::kInvalidConfig, "layer sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<std::size_t>(sizes[l]);
    const auto out = static_cast<std::size_t>(sizes[l + 1]);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
    for (double& w : layer.weights.values()) w = normal(rng);
    layers.push_back(std::move(layer));
  }
  return EmbeddingNet(std::move(layers));
}

std::vector<int> EmbeddingNet::sizes() const {
  std::vector<int> out;
  if (layers_.empty()) return out;
  out.push_back(static_cast<int>(layers_.front().weights.cols()));
  for (const auto& layer : layers_) out.push_back(static_cast<int>(layer.weights.rows()));
  return out;
}

int EmbeddingNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
}

int EmbeddingNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows());
}

std::vector<DenseLayer>& EmbeddingNet::mutable_layers() {
  generation_ = next_generation();
  return layers_;
}

ForwardPass EmbeddingNet::forward(const Matrix& inputs) const {
  if (layers_.empty()) throw Error(ErrorCode::kInvalidConfig, "network has no layers");
  if (inputs.cols() != static_cast<std::size_t>(input_dim())) {
    throw Error(ErrorCode::kShapeMismatch, "input dimension " + std::to_string(inputs.cols()) +
                                               " but network expects " +
                                               std::to_string(input_dim()));
  }
  ForwardPass pass;
  pass.generation = generation_;
  Matrix current = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    const std::size_t out_dim = layer.weights.rows();
    Matrix pre(current.rows(), out_dim);
    for (std::size_t b = 0; b < current.rows(); ++b) {
      const auto x = current.row(b);
      auto z = pre.row(b);
      for (std::size_t o = 0; o < out_dim; ++o) z[o] = layer.bias[o] + dot(layer.weights.row(o), x);
    }
    pass.layer_inputs.push_back(std::move(current));
    current = pre;
    if (l + 1 < layers_.size()) {
      for (double& v : current.values()) v = v > 0.0 ? v : 0.0;
    }
    pass.pre_activations.push_back(std::move(pre));
  }
  pass.norms.resize(current.rows());
  pass.outputs = Matrix(current.rows(), current.cols());
  for (std::size_t b = 0; b < current.rows(); ++b) {
    pass.norms[b] = l2_norm(current.row(b));
    const Vector unit = l2_normalize(current.row(b));
    std::copy(unit.begin(), unit.end(), pass.outputs.row(b).begin());
  }
  return pass;
}

NetGradients EmbeddingNet::backward(const ForwardPass& pass, const Matrix& d_outputs) const {
  if (pass.generation == 0 || pass.generation != generation_ ||
      pass.layer_inputs.size() != layers_.size()) {
    throw Error(ErrorCode::kStaleCache, "forward pass does not match current parameters");
  }
  if (d_outputs.rows() != pass.outputs.rows() || d_outputs.cols() != pass.outputs.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "upstream gradient shape differs from outputs");
  }

  // Through the normalization: (I - y y^T) g / |z|.
  Matrix delta(d_outputs.rows(), d_outputs.cols());
  for (std::size_t b = 0; b < delta.rows(); ++b) {
    const auto y = pass.outputs.row(b);
    const auto g = d_outputs.row(b);
    const double radial = dot(y, g);
    auto d = delta.row(b);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = (g[k] - y[k] * radial) / pass.norms[b];
  }

  NetGradients grads;
  grads.weights.resize(layers_.size());
  grads.biases.resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    const Matrix& input = pass.layer_inputs[l];
    if (l + 1 < layers_.size()) {
      const Matrix& pre = pass.pre_activations[l];
      for (std::size_t i = 0; i < delta.values().size(); ++i) {
        if (!(pre.values()[i] > 0.0)) delta.values()[i] = 0.0;
      }
    }
    Matrix dw(layer.weights.rows(), layer.weights.cols());
    Vector db(layer.bias.size(), 0.0);
    Matrix d_input(input.rows(), input.cols());
    for (std::size_t b = 0; b < input.rows(); ++b) {
      const auto d = delta.row(b);
      const auto x = input.row(b);
      auto dx = d_input.row(b);
      for (std::size_t o = 0; o < d.size(); ++o) {
        if (d[o] == 0.0) continue;
        db[o] += d[o];
        auto dw_row = dw.row(o);
        const auto w_row = layer.weights.row(o);
        for (std::size_t i = 0; i < x.size(); ++i) {
          dw_row[i] += d[o] * x[i];
          dx[i] += d[o] * w_row[i];
        }
      }
    }
    grads.weights[l] = std::move(dw);
    grads.biases[l] = std::move(db);
    delta = std::move(d_input);
  }
  return grads;
}

}  // namespace uss
