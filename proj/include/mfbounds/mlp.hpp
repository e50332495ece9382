#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "mfbounds/rng.hpp"

namespace mfb {

/// Shape of a fully connected ReLU network with identity output.
///
/// Parameters live in one flat buffer, layer by layer: the weight matrix
/// (fan_out x fan_in, row-major) followed by the bias vector.
class MlpLayout {
 public:
  MlpLayout() = default;
  explicit MlpLayout(std::vector<int> widths);

  /// 1 -> hidden x depth -> 1
  static MlpLayout scalar(int hidden_layers, int width);

  const std::vector<int>& widths() const { return widths_; }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::size_t parameter_count() const { return offsets_.back(); }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
  }

  bool operator==(const MlpLayout&) const = default;

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_{0};
};

/// Activations recorded by a forward pass, consumed by `backward`.
struct MlpTape {
  // activations[l] is the (width_l x batch) input to layer l; activations[0] is the network input.
  std::vector<Eigen::MatrixXd> activations;
};

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Evaluates a scalar-input, scalar-output network at each input. Throws on NaN input.
Eigen::VectorXd forward(const MlpLayout& layout, std::span<const double> params,
                        std::span<const double> inputs);

/// Forward pass that records activations for a later `backward` call.
Eigen::VectorXd forward(const MlpLayout& layout, std::span<const double> params,
                        std::span<const double> inputs, MlpTape& tape);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output) per input.
/// The ReLU derivative at exactly zero is taken to be 0.
void backward(const MlpLayout& layout, std::span<const double> params, const MlpTape& tape,
              std::span<const double> output_grad, std::span<double> grads);

/// Uniform Xavier weights on [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], zero biases.
std::vector<double> init_xavier(const MlpLayout& layout, Seed seed);

/// Owning network, convenient for standalone use.
struct Mlp {
  MlpLayout layout;
  std::vector<double> params;

  static Mlp xavier(std::vector<int> widths, Seed seed);

  Eigen::VectorXd operator()(std::span<const double> inputs) const { return forward(layout, params, inputs); }
};

}  // namespace mfb
