#include <doctest.h>

#include "tvhsd/detector.hpp"
#include "tvhsd/error.hpp"
#include "tvhsd/special.hpp"
#include "tvhsd/trust.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace tvhsd;
using namespace tvhsd::trust;
using ndgrad::Graph;
using ndgrad::Tensor;
using ndgrad::Var;

namespace {

std::vector<double> random_evidence(std::size_t k, std::mt19937_64& rng, double hi = 20.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  std::vector<double> e(k);
  for (double& v : e) v = u(rng);
  return e;
}

// KL(Beta(a, b) || Beta(1, 1)) = integral of f ln f over (0, 1), by composite
// Simpson after p = (1 - cos(pi t)) / 2, which flattens both endpoints.
double beta_kl_quadrature(double a, double b) {
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  auto integrand = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double p = 0.5 * (1.0 - std::cos(std::numbers::pi * t));
    const double q = 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    const double jacobian = 0.5 * std::numbers::pi * std::sin(std::numbers::pi * t);
    const double log_f = log_norm + (a - 1) * std::log(p) + (b - 1) * std::log(q);
    return std::exp(log_f) * log_f * jacobian;
  };
  const int n = 200000;
  const double h = 1.0 / n;
  double acc = integrand(0.0) + integrand(1.0);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("opinion closed values") {
  const Opinion prior = to_opinion(std::vector<double>{0, 0});
  CHECK(prior.alpha == std::vector<double>{1, 1});
  CHECK(prior.strength == 2.0);
  CHECK(prior.belief == std::vector<double>{0, 0});
  CHECK(prior.uncertainty == 1.0);
  CHECK(prior.probability == std::vector<double>{0.5, 0.5});

  const Opinion o = to_opinion(std::vector<double>{2, 6});
  CHECK(o.alpha == std::vector<double>{3, 7});
  CHECK(o.strength == 10.0);
  CHECK(o.belief[0] == doctest::Approx(0.2));
  CHECK(o.belief[1] == doctest::Approx(0.6));
  CHECK(o.uncertainty == doctest::Approx(0.2));
  CHECK(o.probability[0] == doctest::Approx(0.3));
  CHECK(o.probability[1] == doctest::Approx(0.7));

  CHECK_THROWS_AS(to_opinion(std::vector<double>{1.0, -0.1}), DomainError);
  CHECK_THROWS_AS(to_opinion(std::vector<double>{1.0}), ArgumentError);
}

TEST_CASE("opinion mass identity and ranges") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng() % 9;
    const Opinion o = to_opinion(random_evidence(k, rng, trial % 2 ? 1e3 : 5.0));
    double belief = 0.0, prob = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      belief += o.belief[i];
      prob += o.probability[i];
      CHECK(o.alpha[i] >= 1.0);
    }
    CHECK(std::abs(o.uncertainty + belief - 1.0) < 1e-12);
    CHECK(std::abs(prob - 1.0) < 1e-12);
    CHECK(o.strength >= double(k));
    CHECK(o.uncertainty > 0.0);
    CHECK(o.uncertainty <= 1.0);
    CHECK(o.uncertainty == double(k) / o.strength);
  }
}

TEST_CASE("uncertainty falls as total evidence grows") {
  double previous = 2.0;
  for (double extra : {0.0, 0.5, 1.0, 4.0, 30.0}) {
    const double u = to_opinion(std::vector<double>{extra, 3.0}).uncertainty;
    CHECK(u < previous);
    previous = u;
  }
}

TEST_CASE("digamma loss closed values") {
  CHECK(std::abs(loss_digamma(std::vector<double>{1, 1}, std::vector<double>{1, 0}) - 1.0) < 1e-12);
  CHECK(std::abs(loss_digamma(std::vector<double>{5, 1}, std::vector<double>{1, 0}) - 0.2) < 1e-12);
  CHECK(std::abs(loss_digamma(std::vector<double>{1, 5}, std::vector<double>{1, 0}) - 137.0 / 60) <
        1e-12);
  CHECK_THROWS_AS(loss_digamma(std::vector<double>{1, 1}, std::vector<double>{0.5, 0.5}),
                  ArgumentError);
  CHECK_THROWS_AS(loss_digamma(std::vector<double>{1, 1}, std::vector<double>{1, 1}),
                  ArgumentError);
  CHECK_THROWS_AS(loss_digamma(std::vector<double>{1, 1}, std::vector<double>{0, 0}),
                  ArgumentError);
}

TEST_CASE("digamma loss is positive and decreasing in target evidence") {
  for (std::size_t k : {2u, 3u, 6u}) {
    for (double other : {0.0, 1.0, 10.0}) {
      double previous = INFINITY;
      for (double target = 0.0; target <= 50.0; target += 0.5) {
        std::vector<double> alpha(k, other + 1.0);
        alpha[0] = target + 1.0;
        const double loss = loss_digamma(alpha, one_hot(0, k));
        CHECK(loss > 0.0);
        CHECK(loss < previous);
        previous = loss;
      }
    }
  }
}

TEST_CASE("adjusted alpha") {
  CHECK(adjusted_alpha(std::vector<double>{5, 1}, std::vector<double>{1, 0}) ==
        std::vector<double>{1, 1});
  CHECK(adjusted_alpha(std::vector<double>{1, 1}, std::vector<double>{0, 1}) ==
        std::vector<double>{1, 1});
  CHECK(adjusted_alpha(std::vector<double>{3, 7, 2}, std::vector<double>{0, 1, 0}) ==
        std::vector<double>{3, 1, 2});
}

TEST_CASE("Dirichlet KL closed values") {
  for (std::size_t k = 2; k <= 10; ++k) CHECK(kl_uniform_dirichlet(std::vector<double>(k, 1.0)) == 0.0);
  const double expected = std::numbers::ln2 - 0.5;
  CHECK(std::abs(kl_uniform_dirichlet(std::vector<double>{2, 1}) - expected) < 1e-12);
  CHECK(std::abs(beta_kl_quadrature(2, 1) - expected) < 1e-9);
  CHECK_THROWS_AS(kl_uniform_dirichlet(std::vector<double>{0.5, 1}), DomainError);
}

TEST_CASE("Dirichlet KL matches quadrature for two classes") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 12.0);
  for (int trial = 0; trial < 8; ++trial) {
    const double a = u(rng), b = u(rng);
    CHECK(std::abs(kl_uniform_dirichlet(std::vector<double>{a, b}) - beta_kl_quadrature(a, b)) <
          1e-7);
  }
}

TEST_CASE("Dirichlet KL is non-negative") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> alpha(2 + rng() % 9);
    for (double& a : alpha) a = u(rng);
    CHECK(kl_uniform_dirichlet(alpha) >= 0.0);
  }
}

TEST_CASE("evidence only on the target class costs no KL") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 5;
    const std::size_t target = rng() % k;
    std::vector<double> e(k, 0.0);
    e[target] = 100.0 * std::generate_canonical<double, 53>(rng);
    CHECK(loss_trust(e, one_hot(target, k), 1.0).kl_term == 0.0);
  }
}

TEST_CASE("annealing schedule") {
  CHECK(annealing(0, 800) == 0.0);
  CHECK(annealing(200, 800) == 0.5);
  CHECK(annealing(400, 800) == 1.0);
  CHECK(annealing(800, 800) == 1.0);
  for (std::size_t total : {1u, 2u, 7u, 10u, 801u}) {
    double previous = 0.0;
    const std::size_t ramp_end = (total + 1) / 2;
    for (std::size_t c = 0; c <= total; ++c) {
      const double lambda = annealing(c, total);
      CHECK(lambda >= previous);
      CHECK((c >= ramp_end) == (lambda == 1.0));
      previous = lambda;
    }
  }
}

TEST_CASE("trust loss closed values") {
  for (std::size_t epoch : {0u, 100u, 800u}) {
    const LossBreakdown b = loss_trust(std::vector<double>{0, 0}, std::vector<double>{0, 1}, epoch, 800);
    CHECK(std::abs(b.total - 1.0) < 1e-12);
    CHECK(std::abs(b.digamma_term - 1.0) < 1e-12);
    CHECK(b.kl_term == 0.0);
  }
  const LossBreakdown early = loss_trust(std::vector<double>{4, 0}, std::vector<double>{1, 0}, 0, 800);
  CHECK(std::abs(early.total - 0.2) < 1e-12);
  const LossBreakdown late = loss_trust(std::vector<double>{0, 1}, std::vector<double>{1, 0}, 800, 800);
  CHECK(std::abs(late.digamma_term - 1.5) < 1e-12);
  CHECK(std::abs(late.kl_term - (std::numbers::ln2 - 0.5)) < 1e-12);
  CHECK(std::abs(late.total - (1.0 + std::numbers::ln2)) < 1e-12);
  CHECK(late.lambda == 1.0);
}

TEST_CASE("trust loss gradient matches finite differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t batch = 1 + rng() % 5, k = 2 + rng() % 5;
    std::vector<int> labels(batch);
    for (int& l : labels) l = static_cast<int>(rng() % k);
    std::vector<double> e(batch * k);
    for (double& v : e) v = 0.05 + 15.0 * std::generate_canonical<double, 53>(rng);
    const double lambda = (trial % 3) / 2.0;
    const std::vector<Tensor> params{Tensor::matrix(batch, k, e)};
    const double err = ndgrad::grad_check(
        [&](Graph&, std::span<const Var> p) { return trust_loss(p[0], labels, lambda); }, params,
        1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("trust loss batch breakdown is the mean of per-sample terms") {
  const std::vector<double> e{1, 2, 0.5, 0, 3, 3};
  Graph g;
  LossBreakdown b;
  const Var loss = trust_loss(g.leaf(Tensor::matrix(2, 3, e)), std::vector<int>{1, 0}, 0.25, &b);
  const LossBreakdown r0 = loss_trust(std::vector<double>{1, 2, 0.5}, one_hot(1, 3), 0.25);
  const LossBreakdown r1 = loss_trust(std::vector<double>{0, 3, 3}, one_hot(0, 3), 0.25);
  CHECK(std::abs(b.digamma_term - (r0.digamma_term + r1.digamma_term) / 2) < 1e-14);
  CHECK(std::abs(b.kl_term - (r0.kl_term + r1.kl_term) / 2) < 1e-14);
  CHECK(std::abs(loss.value()[0] - (r0.total + r1.total) / 2) < 1e-14);
  CHECK(b.lambda == 0.25);
}

TEST_CASE("cross entropy") {
  CHECK(std::abs(loss_cross_entropy(std::vector<double>{0.3, 0.3}, std::vector<double>{1, 0}) -
                 std::numbers::ln2) < 1e-15);
  CHECK(loss_cross_entropy(std::vector<double>{10, 0}, std::vector<double>{1, 0}) < 1e-4);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng() % 6, target = rng() % k;
    std::vector<double> z(k);
    for (double& v : z) v = normal(rng);
    double denom = 0.0;
    for (double v : z) denom += std::exp(v);
    const double brute = -std::log(std::exp(z[target]) / denom);
    CHECK(std::abs(loss_cross_entropy(z, one_hot(target, k)) - brute) < 1e-12);
  }
  CHECK(std::isfinite(loss_cross_entropy(std::vector<double>{1000, -1000}, std::vector<double>{0, 1})));
}

TEST_CASE("cross entropy gradient matches finite differences") {
  std::mt19937_64 rng(7);
  const std::vector<int> labels{0, 2, 1, 1};
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> z(12);
  for (double& v : z) v = normal(rng);
  const std::vector<Tensor> params{Tensor::matrix(4, 3, z)};
  CHECK(ndgrad::grad_check([&](Graph&, std::span<const Var> p) { return cross_entropy_loss(p[0], labels); },
                           params, 1e-5) < 1e-6);
}

TEST_CASE("full trustworthy loss through a tiny detector passes grad_check") {
  detector::DetectorConfig c;
  c.text_dim = 6;
  c.image_dim = 4;
  c.align_dim = 8;
  c.state_size = 4;
  c.se_reduction = 2;
  c.num_classes = 3;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    c.seed = seed;
    const detector::DetectorParams p = detector::DetectorParams::init(c);
    std::vector<double> t(5 * 6), v(5 * 4);
    for (double& x : t) x = normal(rng);
    for (double& x : v) x = normal(rng);
    const Tensor text = Tensor::matrix(5, 6, t), image = Tensor::matrix(5, 4, v);
    const std::vector<int> labels{0, 1, 2, 1, 0};
    std::vector<Tensor> params;
    for (const Tensor* x : p.tensors()) params.push_back(*x);
    const double err = ndgrad::grad_check(
        [&](Graph& g, std::span<const Var> vars) {
          detector::ParamVars pv;
          std::copy(vars.begin(), vars.end(), pv.all.begin());
          return trust_loss(detector::forward(g, pv, text, image).evidence, labels, 0.7);
        },
        params, 1e-5);
    CHECK(err < 1e-4);
  }
}
