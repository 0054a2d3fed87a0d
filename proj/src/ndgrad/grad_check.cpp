#include "tvhsd/error.hpp"
#include "tvhsd/ndgrad.hpp"

#include <algorithm>
#include <cmath>

namespace tvhsd::ndgrad {

namespace {

double evaluate(const ScalarFn& f, std::span<const Tensor> params) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(g.leaf(p));
  const Var out = f(g, vars);
  if (out.value().size() != 1) {
    throw ShapeError("grad_check needs a scalar function, got " +
                     shape_string(out.value().shape()));
  }
  return out.value()[0];
}

}  // namespace

double grad_check(const ScalarFn& f, std::span<const Tensor> params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ArgumentError("grad_check eps must lie in [1e-7, 1e-3], got " +
                        std::to_string(eps));
  }

  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(g.leaf(p));
    const Var out = f(g, vars);
    if (!std::isfinite(out.value()[0])) {
      throw NumericalError("grad_check: non-finite loss at the base point");
    }
    g.backward(out);
    for (const Var& v : vars) analytic.push_back(g.grad(v));
  }

  std::vector<Tensor> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t i = 0; i < probe[t].size(); ++i) {
      const double saved = probe[t][i];
      probe[t][i] = saved + eps;
      const double up = evaluate(f, probe);
      probe[t][i] = saved - eps;
      const double down = evaluate(f, probe);
      probe[t][i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericalError("grad_check: non-finite loss at perturbed point (param " +
                             std::to_string(t) + ", entry " + std::to_string(i) + ")");
      }
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[t][i];
      const double denom = std::max({1.0, std::abs(an), std::abs(fd)});
      worst = std::max(worst, std::abs(an - fd) / denom);
    }
  }
  return worst;
}

}  // namespace tvhsd::ndgrad
