#include "mfbounds/adam.hpp"

#include <cmath>

#include "mfbounds/error.hpp"

namespace mfb {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  require(params.size() == grads.size(), "Adam: parameter and gradient sizes differ");
  require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
          "Adam: moment buffers do not match the parameters");
  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.epsilon);
  }
}

}  // namespace mfb
