#include "clstream/network.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "clstream/error.hpp"
#include "clstream/kernels.hpp"
#include "clstream/rng.hpp"

namespace cl {

Parameter::Parameter(std::string id_, Matrix value_)
    : id(std::move(id_)), value(std::move(value_)), grad(value.rows(), value.cols()) {}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.bias.value.rows() != 1 || l.bias.value.cols() != l.out())
      throw ShapeError("network: bias shape does not match layer " + std::to_string(k));
    if (k > 0 && layers_[k - 1].out() != l.in())
      throw ShapeError("network: layer " + std::to_string(k) + " input does not chain");
  }
}

std::size_t Network::input_size() const { return layers_.empty() ? 0 : layers_.front().in(); }
std::size_t Network::output_size() const { return layers_.empty() ? 0 : layers_.back().out(); }

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

bool operator==(const Network& a, const Network& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k) {
    const Layer& x = a.layers_[k];
    const Layer& y = b.layers_[k];
    if (x.activation != y.activation || x.weight.id != y.weight.id || x.bias.id != y.bias.id ||
        x.weight.value != y.weight.value || x.bias.value != y.bias.value)
      return false;
  }
  return true;
}

Network init_network(std::span<const std::size_t> layout, std::uint64_t seed, Activation final_activation,
                     const std::string& id_prefix) {
  if (layout.size() < 2) throw InvalidArgument("init_network: layout needs at least two sizes");
  if (std::any_of(layout.begin(), layout.end(), [](std::size_t s) { return s == 0; }))
    throw InvalidArgument("init_network: layer sizes must be >= 1");

  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t k = 0; k + 1 < layout.size(); ++k) {
    const std::size_t in = layout[k], out = layout[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(in, out);
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    Layer layer;
    const std::string name = id_prefix + std::to_string(k);
    layer.weight = Parameter(name + ".weight", std::move(w));
    layer.bias = Parameter(name + ".bias", Matrix(1, out));
    layer.activation = (k + 2 == layout.size()) ? final_activation : Activation::relu;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

Matrix forward(const Network& net, const Matrix& x, ForwardCache& cache) {
  if (net.empty()) throw StateError("forward: empty network");
  if (x.cols() != net.input_size())
    throw ShapeError("forward: input width " + std::to_string(x.cols()) + " != " + std::to_string(net.input_size()));
  cache.clear();
  Matrix h = x;
  for (const Layer& l : net.layers()) {
    cache.inputs.push_back(h);
    Matrix z = kernels::matmul(h, l.weight.value);
    kernels::add_row_broadcast(z, l.bias.value);
    cache.pre_activations.push_back(z);
    if (l.activation == Activation::relu)
      for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
    h = std::move(z);
  }
  cache.valid = true;
  return h;
}

Matrix forward(const Network& net, const Matrix& x) {
  ForwardCache scratch;
  return forward(net, x, scratch);
}

Matrix backward(Network& net, const ForwardCache& cache, const Matrix& dout) {
  if (!cache.valid || cache.inputs.size() != net.layers().size())
    throw StateError("backward: no forward cache for this network");
  Matrix delta = dout;
  for (std::size_t k = net.layers().size(); k-- > 0;) {
    Layer& l = net.layers()[k];
    if (!delta.same_shape(cache.pre_activations[k])) throw ShapeError("backward: gradient shape mismatch");
    if (l.activation == Activation::relu) {
      auto d = delta.values();
      auto z = cache.pre_activations[k].values();
      for (std::size_t i = 0; i < d.size(); ++i)
        if (!(z[i] > 0.0)) d[i] = 0.0;
    }
    kernels::accumulate(l.weight.grad, kernels::matmul_tn(cache.inputs[k], delta));
    kernels::accumulate(l.bias.grad, kernels::column_sums(delta));
    delta = kernels::matmul_nt(delta, l.weight.value);
  }
  return delta;
}

void sgd_step(std::span<Parameter* const> params, double lr) {
  if (!(lr > 0.0)) throw InvalidArgument("sgd_step: learning rate must be positive");
  for (Parameter* p : params) {
    auto v = p->value.values();
    auto g = p->grad.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
  }
}

void sgd_step(Network& net, double lr) { sgd_step(net.parameters(), lr); }

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->grad.fill(0.0);
}

void zero_grads(Network& net) { zero_grads(net.parameters()); }

}  // namespace cl
