#include "tvhsd/detector.hpp"

#include "tvhsd/error.hpp"

#include <cmath>

namespace tvhsd::detector {

ParamVars bind(Graph& graph, const DetectorParams& params) {
  ParamVars vars;
  const auto ts = params.tensors();
  for (std::size_t i = 0; i < DetectorParams::kCount; ++i) vars.all[i] = graph.leaf(*ts[i]);
  return vars;
}

namespace {

// Derivatives of phi(a, Delta) = b_bar / b with respect to a and Delta,
// matching the two branches of discretize().
struct PhiPartials {
  double d_a;
  double d_delta;
};

PhiPartials phi_partials(double a, double delta) {
  const double u = delta * a;
  if (std::abs(u) < kTaylorSwitch) return {0.5 * delta * delta, 1.0 + u};
  // d phi / d a = Delta^2 g'(u) with g(u) = (e^u - 1) / u.
  double g_prime;
  if (std::abs(u) < 0.1) {
    // g'(u) = sum_{k>=1} k u^(k-1) / (k+1)!
    g_prime = 0.0;
    double power = 1.0, factorial = 2.0;
    for (int k = 1; k <= 16; ++k) {
      g_prime += k * power / factorial;
      power *= u;
      factorial *= k + 2;
    }
  } else {
    g_prime = (u * std::exp(u) - std::expm1(u)) / (u * u);
  }
  return {delta * delta * g_prime, std::exp(u)};
}

}  // namespace

Var ssm_kernel(Var a_log, Var ssm_b, Var ssm_c, Var delta_log, std::size_t length) {
  Graph& g = *a_log.graph;
  const std::size_t n = a_log.value().size();
  if (ssm_b.value().size() != n || ssm_c.value().size() != n || delta_log.value().size() != 1) {
    throw ShapeError("ssm_kernel parameter sizes disagree");
  }
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = -std::exp(a_log.value()[i]);
  const double delta = std::exp(delta_log.value()[0]);
  const Discretized d = discretize(a, ssm_b.value().data(), delta);
  // b_bar / b, needed separately for the B gradient.
  const std::vector<double> phi = discretize(a, std::vector<double>(n, 1.0), delta).b_bar;
  Tensor kernel = Tensor::vector(ssm_kernel(d, ssm_c.value().data(), length));

  return g.push(std::move(kernel), [=](Graph& g, const Tensor& gout) {
    const Tensor& b = g.value(ssm_b);
    const Tensor& c = g.value(ssm_c);
    Tensor g_alog({n}), g_b({n}), g_c({n});
    double g_delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double abar = d.a_bar[i], bbar = d.b_bar[i];
      double gc = 0.0, gb = 0.0, gabar = 0.0, gphi = 0.0;
      double power = 1.0, power_prev = 0.0;  // abar^j, j * abar^(j-1)
      for (std::size_t j = 0; j < length; ++j) {
        const double gj = gout[j];
        gc += gj * power * bbar;
        gb += gj * c[i] * power * phi[i];
        gabar += gj * c[i] * power_prev * bbar;
        gphi += gj * c[i] * power * b[i];
        power_prev = power_prev * abar + power;
        power *= abar;
      }
      const PhiPartials dphi = phi_partials(a[i], delta);
      const double ga = gabar * delta * abar + gphi * dphi.d_a;
      g_delta += gabar * a[i] * abar + gphi * dphi.d_delta;
      g_alog[i] = ga * a[i];
      g_b[i] = gb;
      g_c[i] = gc;
    }
    g.accumulate(a_log, g_alog);
    g.accumulate(ssm_b, g_b);
    g.accumulate(ssm_c, g_c);
    g.accumulate(delta_log, Tensor::scalar(g_delta * delta));
  });
}

std::vector<Var> causal_conv(std::span<const Var> sequence, Var kernel) {
  const std::size_t len = sequence.size();
  if (len == 0) return {};
  if (kernel.value().size() < len) throw ShapeError("causal_conv: kernel shorter than sequence");
  Graph& g = *kernel.graph;
  const ndgrad::Shape shape = sequence[0].value().shape();
  for (const Var& x : sequence) {
    if (x.value().shape() != shape) {
      throw ShapeError("causal_conv: sequence entries " + ndgrad::shape_string(shape) + " and " +
                       ndgrad::shape_string(x.value().shape()));
    }
  }
  const std::vector<Var> xs(sequence.begin(), sequence.end());
  std::vector<Var> ys;
  for (std::size_t t = 0; t < len; ++t) {
    Tensor y(shape);
    for (std::size_t j = 0; j <= t; ++j) {
      const double kj = kernel.value()[j];
      const Tensor& x = xs[t - j].value();
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += kj * x[i];
    }
    ys.push_back(g.push(std::move(y), [xs, kernel, t](Graph& g, const Tensor& gout) {
      Tensor gk(g.value(kernel).shape());
      for (std::size_t j = 0; j <= t; ++j) {
        const Var x = xs[t - j];
        const Tensor& xv = g.value(x);
        const double kj = g.value(kernel)[j];
        Tensor gx(xv.shape());
        double dot = 0.0;
        for (std::size_t i = 0; i < gout.size(); ++i) {
          gx[i] = kj * gout[i];
          dot += gout[i] * xv[i];
        }
        gk[j] = dot;
        g.accumulate(x, gx);
      }
      g.accumulate(kernel, gk);
    }));
  }
  return ys;
}

ForwardVars forward(Graph& graph, const ParamVars& p, const Tensor& text, const Tensor& image) {
  using namespace ndgrad;
  if (text.rows() != image.rows()) {
    throw ShapeError("text batch " + shape_string(text.shape()) + " and image batch " +
                     shape_string(image.shape()) + " differ in rows");
  }
  const Var xt = graph.constant(text);
  const Var xi = graph.constant(image);
  const Var rt = add_rowwise(matmul(xt, transpose(p.w_txt())), p.b_txt());
  const Var ri = add_rowwise(matmul(xi, transpose(p.w_img())), p.b_img());

  const Var squeeze = scale(add(rt, ri), 0.5);
  const Var hidden = relu(matmul(squeeze, transpose(p.se_w1())));
  const Var gate = sigmoid(matmul(hidden, transpose(p.se_w2())));
  const std::array<Var, 2> tokens{mul(rt, gate), mul(ri, gate)};

  const Var kernel = ssm_kernel(p.a_log(), p.ssm_b(), p.ssm_c(), p.delta_log(), tokens.size());
  const std::vector<Var> ys = causal_conv(tokens, kernel);
  const Var pooled = scale(add(ys[0], ys[1]), 0.5);

  const Var logits = add_rowwise(matmul(pooled, transpose(p.w_head())), p.b_head());
  return {logits, softplus(logits)};
}

}  // namespace tvhsd::detector
