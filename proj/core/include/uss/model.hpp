#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uss/numerics.hpp"

namespace uss {

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out

  bool operator==(const DenseLayer&) const = default;
};

struct NetGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Everything backward() needs from a forward call. Tied to the parameter
// generation it was computed with.
struct ForwardPass {
  Matrix outputs;                       // unit-norm embeddings, one per row
  std::vector<Matrix> layer_inputs;     // input of every affine layer
  std::vector<Matrix> pre_activations;  // affine output of every layer
  Vector norms;                         // norm of each row before normalization
  std::uint64_t generation = 0;
};

// Fully-connected stack: affine + ReLU on hidden layers, affine on the last
// layer, then l2 normalization of every output row.
class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  explicit EmbeddingNet(std::vector<DenseLayer> layers);

  /// He-normal weights (std = sqrt(2 / fan_in)), zero biases.
  static EmbeddingNet he_initialized(std::span<const int> sizes, std::uint64_t seed);

  std::vector<int> sizes() const;
  int input_dim() const;
  int output_dim() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Every call invalidates forward passes computed before it.
  std::vector<DenseLayer>& mutable_layers();

  ForwardPass forward(const Matrix& inputs) const;

  /// Parameter gradients given d(loss)/d(outputs). Throws StaleCache when the
  /// pass predates a parameter update or came from another network.
  NetGradients backward(const ForwardPass& pass, const Matrix& d_outputs) const;

  std::uint64_t generation() const noexcept { return generation_; }

  bool operator==(const EmbeddingNet& other) const { return layers_ == other.layers_; }

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t generation_ = 0;
};

}  // namespace uss
