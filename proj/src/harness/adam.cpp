#include "tvhsd/error.hpp"
#include "tvhsd/harness.hpp"

#include <cmath>

namespace tvhsd::harness {

AdamState adam_init(std::span<const ndgrad::Tensor* const> params) {
  AdamState state;
  for (const ndgrad::Tensor* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

void adam_step(std::span<ndgrad::Tensor* const> params, std::span<const ndgrad::Tensor> grads,
               AdamState& state, std::size_t t, const TrainConfig& config) {
  if (t < 1) throw ArgumentError("Adam step index starts at 1");
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("Adam got " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " + std::to_string(state.m.size()) +
                     " moment slots");
  }
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ndgrad::Tensor& p = *params[i];
    const ndgrad::Tensor& g = grads[i];
    if (g.shape() != p.shape() || state.m[i].shape() != p.shape()) {
      throw ShapeError("Adam slot " + std::to_string(i) + ": param " +
                       ndgrad::shape_string(p.shape()) + ", grad " + ndgrad::shape_string(g.shape()));
    }
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    auto w = p.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      w[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

}  // namespace tvhsd::harness
