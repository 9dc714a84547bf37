#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clstream/matrix.hpp"

namespace cl {

using ClassId = int;

struct Parameter {
  std::string id;
  Matrix value;
  Matrix grad;  // same shape as value

  Parameter() = default;
  Parameter(std::string id_, Matrix value_);
};

enum class Activation { relu, identity };

struct Layer {
  Parameter weight;  // [in × out]
  Parameter bias;    // [1 × out]
  Activation activation = Activation::identity;

  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }
};

/// Stack of affine layers with per-layer activation.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  bool empty() const { return layers_.empty(); }
  std::size_t input_size() const;
  std::size_t output_size() const;

  /// Weight then bias, layer by layer.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  friend bool operator==(const Network&, const Network&);

 private:
  std::vector<Layer> layers_;
};

/// Per-layer activations recorded by forward() for backward().
struct ForwardCache {
  std::vector<Matrix> inputs;           // input to layer k
  std::vector<Matrix> pre_activations;  // affine output of layer k
  bool valid = false;

  void clear() {
    inputs.clear();
    pre_activations.clear();
    valid = false;
  }
};

/// Xavier-uniform weights, zero biases. Hidden layers use ReLU and the last
/// layer uses `final_activation`. Parameter ids are "<prefix><k>.weight" and
/// "<prefix><k>.bias".
Network init_network(std::span<const std::size_t> layout, std::uint64_t seed,
                     Activation final_activation = Activation::identity,
                     const std::string& id_prefix = "layer");

Matrix forward(const Network& net, const Matrix& x, ForwardCache& cache);

/// Inference-only forward pass.
Matrix forward(const Network& net, const Matrix& x);

/// Accumulates parameter gradients and returns d(loss)/d(input).
Matrix backward(Network& net, const ForwardCache& cache, const Matrix& dout);

void sgd_step(std::span<Parameter* const> params, double lr);
void sgd_step(Network& net, double lr);

void zero_grads(std::span<Parameter* const> params);
void zero_grads(Network& net);

}  // namespace cl
