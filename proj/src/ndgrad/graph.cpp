#include "tvhsd/error.hpp"
#include "tvhsd/ndgrad.hpp"

#include <cmath>

namespace tvhsd::ndgrad {

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::leaf(Tensor value) { return push(std::move(value), nullptr); }

Var Graph::constant(Tensor value) {
  const Var v = push(std::move(value), nullptr);
  nodes_.back().constant = true;
  return v;
}

Var Graph::push(Tensor value, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backward), false});
  return Var{this, nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const { return nodes_.at(v.id).value; }

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.grad.empty()) return Tensor(node.value.shape());
  return node.grad;
}

Tensor& Graph::grad_storage(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.empty()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

void Graph::accumulate(Var v, const Tensor& g) {
  Tensor& dst = grad_storage(v.id);
  if (dst.size() != g.size()) {
    throw ShapeError("gradient " + shape_string(g.shape()) + " for value " +
                     shape_string(dst.shape()));
  }
  auto out = dst.data();
  auto in = g.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
}

void Graph::accumulate(Var v, std::size_t index, double g) {
  grad_storage(v.id)[index] += g;
}

void Graph::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("backward needs a scalar root, got " +
                     shape_string(value(root).shape()));
  }
  for (Node& node : nodes_) node.grad = Tensor{};
  grad_storage(root.id)[0] = 1.0;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty() || !node.backward) continue;
    // Parents always have smaller ids, so node.grad is stable during the call.
    node.backward(*this, node.grad);
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

namespace {

enum class Broadcast { same, left_scalar, right_scalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (a.size() == 1) return Broadcast::left_scalar;
  if (b.size() == 1) return Broadcast::right_scalar;
  throw ShapeError(std::string(op) + " of " + shape_string(a.shape()) + " and " +
                   shape_string(b.shape()));
}

// Applies f elementwise with scalar broadcasting; dfa/dfb give the local
// partial derivatives at (x, y).
template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* name, F f, DA dfa, DB dfb) {
  Graph& g = *a.graph;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast kind = broadcast_kind(av, bv, name);
  const Tensor& big = kind == Broadcast::left_scalar ? bv : av;
  Tensor out(big.shape());
  auto x_at = [&](std::size_t i) { return kind == Broadcast::left_scalar ? av[0] : av[i]; };
  auto y_at = [&](std::size_t i) { return kind == Broadcast::right_scalar ? bv[0] : bv[i]; };
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x_at(i), y_at(i));
  return g.push(std::move(out), [a, b, kind, dfa, dfb](Graph& g, const Tensor& gout) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    Tensor ga(av.shape()), gb(bv.shape());
    for (std::size_t i = 0; i < gout.size(); ++i) {
      const std::size_t ia = kind == Broadcast::left_scalar ? 0 : i;
      const std::size_t ib = kind == Broadcast::right_scalar ? 0 : i;
      ga[ia] += gout[i] * dfa(av[ia], bv[ib]);
      gb[ib] += gout[i] * dfb(av[ia], bv[ib]);
    }
    g.accumulate(a, ga);
    g.accumulate(b, gb);
  });
}

template <class F, class D>
Var unary(Var a, F f, D df) {
  Graph& g = *a.graph;
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return g.push(std::move(out), [a, df](Graph& g, const Tensor& gout) {
    const Tensor& av = g.value(a);
    Tensor ga(av.shape());
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = gout[i] * df(av[i]);
    g.accumulate(a, ga);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = *a.graph;
  Tensor out = matmul(a.value(), b.value());
  return g.push(std::move(out), [a, b](Graph& g, const Tensor& gout) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    if (!g.is_constant(a)) {
      Tensor ga(av.shape());
      gemm_nt(m, n, k, gout.data().data(), bv.data().data(), ga.data().data());
      g.accumulate(a, ga);
    }
    if (!g.is_constant(b)) {
      Tensor gb(bv.shape());
      gemm_tn(k, m, n, av.data().data(), gout.data().data(), gb.data().data());
      g.accumulate(b, gb);
    }
  });
}

Var transpose(Var a) {
  Graph& g = *a.graph;
  return g.push(transpose(a.value()), [a](Graph& g, const Tensor& gout) {
    g.accumulate(a, transpose(gout));
  });
}

Var add(Var a, Var b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; },
                [](double, double) { return 1.0; },
                [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; },
                [](double, double) { return 1.0; },
                [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; },
                [](double, double y) { return y; },
                [](double x, double) { return x; });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return factor * x; },
               [factor](double) { return factor; });
}

Var add_rowwise(Var matrix, Var bias) {
  Graph& g = *matrix.graph;
  const Tensor& mv = matrix.value();
  const Tensor& bv = bias.value();
  if (mv.rank() != 2 || bv.size() != mv.cols()) {
    throw ShapeError("add_rowwise of " + shape_string(mv.shape()) + " and " +
                     shape_string(bv.shape()));
  }
  Tensor out = mv;
  const std::size_t r = mv.rows(), c = mv.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += bv[j];
  return g.push(std::move(out), [matrix, bias, r, c](Graph& g, const Tensor& gout) {
    Tensor gb(g.value(bias).shape());
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gb[j] += gout[i * c + j];
    g.accumulate(matrix, gout);
    g.accumulate(bias, gb);
  });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); },
               [](double x) { return std::exp(x); });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return sigmoid(x); },
               [](double x) {
                 const double s = sigmoid(x);
                 return s * (1.0 - s);
               });
}

Var softplus(Var a) {
  return unary(a, [](double x) { return softplus(x); },
               [](double x) { return sigmoid(x); });
}

Var sum(Var a) {
  Graph& g = *a.graph;
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return g.push(Tensor::scalar(total), [a](Graph& g, const Tensor& gout) {
    g.accumulate(a, Tensor(g.value(a).shape(), gout[0]));
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

}  // namespace tvhsd::ndgrad
