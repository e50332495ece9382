#include "mfbounds/mlp.hpp"

#include <cmath>

#include "mfbounds/error.hpp"

namespace mfb {

MlpLayout::MlpLayout(std::vector<int> widths) : widths_(std::move(widths)) {
  require(widths_.size() >= 2, "a network needs at least an input and an output width");
  for (int w : widths_) require(w >= 1, "layer widths must be positive");
  for (int l = 0; l + 1 < static_cast<int>(widths_.size()); ++l) {
    const auto fan_in = static_cast<std::size_t>(widths_[l]);
    const auto fan_out = static_cast<std::size_t>(widths_[l + 1]);
    offsets_.push_back(offsets_.back() + fan_in * fan_out + fan_out);
  }
}

MlpLayout MlpLayout::scalar(int hidden_layers, int width) {
  require(hidden_layers >= 0, "hidden layer count must be nonnegative");
  std::vector<int> widths{1};
  for (int l = 0; l < hidden_layers; ++l) widths.push_back(width);
  widths.push_back(1);
  return MlpLayout(std::move(widths));
}

namespace {

void check_inputs(const MlpLayout& layout, std::span<const double> params, std::span<const double> inputs) {
  require(layout.input_width() == 1 && layout.output_width() == 1, "network must be scalar-to-scalar");
  require(params.size() == layout.parameter_count(), "parameter buffer does not match the layout");
  for (double x : inputs) {
    if (std::isnan(x)) fail(ErrorKind::Evaluation, "NaN network input");
  }
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Products run on owned (Eigen-aligned) copies of the weights. Maps into the
// flat buffer have address-dependent alignment, and Eigen's peeling then
// changes the rounding, which breaks run-to-run reproducibility.
RowMajorMatrix weights(const MlpLayout& layout, std::span<const double> params, int l) {
  return RowMajorMap(params.data() + layout.weight_offset(l), layout.widths()[l + 1], layout.widths()[l]);
}

template <class Record>
Eigen::VectorXd run_forward(const MlpLayout& layout, std::span<const double> params,
                            std::span<const double> inputs, Record&& record) {
  check_inputs(layout, params, inputs);
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd a = Eigen::Map<const Eigen::RowVectorXd>(inputs.data(), n);
  const int layers = layout.layer_count();
  for (int l = 0; l < layers; ++l) {
    const int out = layout.widths()[l + 1];
    const RowMajorMatrix w = weights(layout, params, l);
    const Eigen::Map<const Eigen::VectorXd> b(params.data() + layout.bias_offset(l), out);
    Eigen::MatrixXd z = w * a;
    z.colwise() += b;
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    record(std::move(a));
    a = std::move(z);
  }
  return a.row(0).transpose();
}

}  // namespace

Eigen::VectorXd forward(const MlpLayout& layout, std::span<const double> params, std::span<const double> inputs) {
  return run_forward(layout, params, inputs, [](Eigen::MatrixXd&&) {});
}

Eigen::VectorXd forward(const MlpLayout& layout, std::span<const double> params, std::span<const double> inputs,
                        MlpTape& tape) {
  tape.activations.clear();
  return run_forward(layout, params, inputs, [&](Eigen::MatrixXd&& a) { tape.activations.push_back(std::move(a)); });
}

void backward(const MlpLayout& layout, std::span<const double> params, const MlpTape& tape,
              std::span<const double> output_grad, std::span<double> grads) {
  const int layers = layout.layer_count();
  require(static_cast<int>(tape.activations.size()) == layers, "tape does not match the layout");
  require(grads.size() == layout.parameter_count(), "gradient buffer does not match the layout");
  const Eigen::Index n = tape.activations.front().cols();
  require(static_cast<Eigen::Index>(output_grad.size()) == n, "output gradient length mismatch");

  // delta holds d(loss)/d(pre-activation) of the current layer.
  Eigen::MatrixXd delta = Eigen::Map<const Eigen::RowVectorXd>(output_grad.data(), n);
  for (int l = layers - 1; l >= 0; --l) {
    const int in = layout.widths()[l];
    const int out = layout.widths()[l + 1];
    const Eigen::MatrixXd& a = tape.activations[l];
    Eigen::Map<RowMajorMatrix> gw(grads.data() + layout.weight_offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> gb(grads.data() + layout.bias_offset(l), out);
    const RowMajorMatrix dw = delta * a.transpose();
    const Eigen::VectorXd db = delta.rowwise().sum();
    gw += dw;
    gb += db;
    if (l > 0) {
      const Eigen::MatrixXd prev = weights(layout, params, l).transpose() * delta;
      // a is the post-ReLU output of layer l-1: zero exactly where the unit was inactive.
      delta = (a.array() > 0.0).select(prev, 0.0);
    }
  }
}

std::vector<double> init_xavier(const MlpLayout& layout, Seed seed) {
  std::vector<double> params(layout.parameter_count(), 0.0);
  Engine engine = make_engine(seed);
  for (int l = 0; l < layout.layer_count(); ++l) {
    const int in = layout.widths()[l];
    const int out = layout.widths()[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const std::size_t begin = layout.weight_offset(l);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k) params[begin + k] = uniform(engine);
  }
  return params;
}

Mlp Mlp::xavier(std::vector<int> widths, Seed seed) {
  require(!widths.empty(), "layer widths must not be empty");
  MlpLayout layout(std::move(widths));
  auto params = init_xavier(layout, seed);
  return Mlp{std::move(layout), std::move(params)};
}

}  // namespace mfb
