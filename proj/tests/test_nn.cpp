#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fd.hpp"
#include "fedssg/core/error.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/nn/checkpoint.hpp"
#include "fedssg/nn/loss.hpp"
#include "fedssg/nn/mlp.hpp"
#include "fedssg/nn/optimizer.hpp"

using namespace fedssg;
using namespace fedssg::nn;

namespace {

MlpTopology tiny_topology(Activation act, double dropout, bool head_norm = true) {
  MlpTopology t;
  t.input_dim = 3;
  t.trunk = {5, 4};
  t.head = {4};
  t.output_dim = 3;
  t.activation = act;
  t.dropout = dropout;
  t.head_norm = head_norm;
  return t;
}

Matrix random_inputs(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("softmax rows sum to one and survive large logits") {
  Matrix l(2, 3);
  l.data = {1000.0, 1001.0, 999.0, -5.0, 0.0, 5.0};
  const auto p = softmax(l);
  for (std::size_t r = 0; r < 2; ++r) CHECK(p(r, 0) + p(r, 1) + p(r, 2) == doctest::Approx(1.0));
  CHECK(std::isfinite(cross_entropy(l, std::vector<int>{0, 2}).loss));
}

TEST_CASE("cross entropy of uniform logits is log C") {
  Matrix l(4, 5, 0.3);
  const auto r = cross_entropy(l, std::vector<int>{0, 1, 2, 4});
  CHECK(r.loss == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(r.grad(0, 0) == doctest::Approx((0.2 - 1.0) / 4.0));
  CHECK(r.grad(0, 1) == doctest::Approx(0.2 / 4.0));
}

TEST_CASE("mse plus l1 hand values") {
  Matrix p(1, 2), t(1, 2);
  p.data = {1.0, -1.0};
  t.data = {0.0, 1.0};
  const auto r = mse_plus_l1(p, t);
  // (1 + 4)/2 + (1 + 2)/2
  CHECK(r.loss == doctest::Approx(4.0));
  CHECK(r.grad.data[0] == doctest::Approx((2.0 + 1.0) / 2.0));
  CHECK(r.grad.data[1] == doctest::Approx((-4.0 - 1.0) / 2.0));
}

TEST_CASE("topology parameter counts") {
  const auto t = tiny_topology(Activation::ReLU, 0.0);
  // trunk: 3*5+5, 5*4+4; head hidden: 4*4+4 plus scale/shift 8; output 4*3+3
  CHECK(t.trunk_param_count() == 20 + 24);
  CHECK(t.param_count() == 20 + 24 + 20 + 8 + 15);
  auto no_norm = t;
  no_norm.head_norm = false;
  CHECK(no_norm.param_count() == t.param_count() - 8);
  auto bad = t;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("cross entropy gradient through the network matches finite differences") {
  RngStream rng(21);
  for (auto act : {Activation::SiLU, Activation::ReLU, Activation::Identity}) {
    for (bool norm : {true, false}) {
      for (double dropout : {0.0, 0.3}) {
        const auto topo = tiny_topology(act, dropout, norm);
        auto params = init_params(topo, rng.derive("init"));
        for (auto& v : params.values) v += 0.1 * rng.normal();
        const auto x = random_inputs(6, 3, rng);
        const std::vector<int> labels = {0, 1, 2, 2, 1, 0};
        const RngStream mask_rng = rng.derive("mask");

        auto loss = [&](std::span<const double> p) {
          RngStream m = mask_rng;
          const auto pass = forward(topo, p, x, Mode::Train, &m);
          return cross_entropy(pass.logits, labels).loss;
        };
        RngStream m = mask_rng;
        const auto pass = forward(topo, params.values, x, Mode::Train, &m);
        const auto ce = cross_entropy(pass.logits, labels);
        std::vector<double> grad(params.values.size(), 0.0);
        backward(topo, params.values, pass, ce.grad, nullptr, grad);
        const auto num = testing::numeric_gradient(loss, params.values);
        CHECK(testing::relative_error(grad, num) < 1e-6);
      }
    }
  }
}

TEST_CASE("input gradient and injected feature gradient match finite differences") {
  RngStream rng(22);
  const auto topo = tiny_topology(Activation::SiLU, 0.0);
  const auto params = init_params(topo, rng.derive("init"));
  const auto x = random_inputs(4, 3, rng);
  const std::vector<int> labels = {0, 1, 2, 1};
  Matrix feature_weight(4, 4);
  for (auto& v : feature_weight.data) v = rng.normal();

  // loss = CE + sum(feature_weight * features)
  auto loss_of = [&](const Matrix& in, std::span<const double> p) {
    const auto pass = forward(topo, p, in, Mode::Eval);
    double extra = 0.0;
    for (std::size_t i = 0; i < pass.features.data.size(); ++i) extra += feature_weight.data[i] * pass.features.data[i];
    return cross_entropy(pass.logits, labels).loss + extra;
  };
  const auto pass = forward(topo, params.values, x, Mode::Eval);
  const auto ce = cross_entropy(pass.logits, labels);
  std::vector<double> grad(params.values.size(), 0.0);
  Matrix grad_in;
  backward(topo, params.values, pass, ce.grad, &feature_weight, grad, &grad_in);

  const auto num_p =
      testing::numeric_gradient([&](std::span<const double> p) { return loss_of(x, p); }, params.values);
  CHECK(testing::relative_error(grad, num_p) < 1e-6);
  const auto num_x = testing::numeric_gradient(
      [&](std::span<const double> flat) {
        Matrix in(4, 3);
        in.data.assign(flat.begin(), flat.end());
        return loss_of(in, params.values);
      },
      x.data);
  CHECK(testing::relative_error(grad_in.data, num_x) < 1e-6);
}

TEST_CASE("eval mode is deterministic and dropout only acts in training") {
  RngStream rng(23);
  const auto topo = tiny_topology(Activation::ReLU, 0.5);
  const auto params = init_params(topo, rng);
  const auto x = random_inputs(5, 3, rng);
  const auto a = forward(topo, params.values, x, Mode::Eval);
  const auto b = forward(topo, params.values, x, Mode::Eval);
  CHECK(a.logits == b.logits);
  CHECK_THROWS_AS(forward(topo, params.values, x, Mode::Train), ConfigError);
  RngStream m(1);
  const auto c = forward(topo, params.values, x, Mode::Train, &m);
  CHECK(c.features == a.features);  // dropout lives in the head only
  CHECK(c.logits != a.logits);
}

TEST_CASE("init params: zero biases, He-scaled weights, unit norm scales") {
  MlpTopology t;
  t.input_dim = 400;
  t.trunk = {300};
  t.output_dim = 2;
  const auto p = init_params(t, RngStream(1));
  double sq = 0.0;
  for (std::size_t i = 0; i < 400 * 300; ++i) sq += p.values[i] * p.values[i];
  CHECK(sq / (400.0 * 300.0) == doctest::Approx(2.0 / 400.0).epsilon(0.02));
  for (std::size_t i = 400 * 300; i < 400 * 300 + 300; ++i) CHECK(p.values[i] == 0.0);
  CHECK(init_params(t, RngStream(1)) == p);
  CHECK(checksum(p.values) == checksum(init_params(t, RngStream(1)).values));
  CHECK(checksum(p.values) != checksum(init_params(t, RngStream(2)).values));
}

TEST_CASE("adamw first step moves each coordinate by lr in the gradient sign") {
  OptimizerConfig cfg;
  auto opt = Optimizer::single_group(cfg, 3, 0.1);
  std::vector<double> p = {1.0, 1.0, 1.0};
  const std::vector<double> g = {2.0, -0.5, 0.0};
  opt.step(p, g);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(1.1).epsilon(1e-7));
  CHECK(p[2] == 1.0);
  CHECK(opt.steps() == 1);
  CHECK(opt.first_moment()[0] == doctest::Approx(0.2));
  CHECK(opt.second_moment()[0] == doctest::Approx(0.004));
}

TEST_CASE("decoupled weight decay and sgd") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Sgd;
  cfg.weight_decay = 0.5;
  auto opt = Optimizer::single_group(cfg, 1, 0.1);
  std::vector<double> p = {2.0};
  const std::vector<double> g = {1.0};
  opt.step(p, g);
  // 2 * (1 - 0.05) - 0.1
  CHECK(p[0] == doctest::Approx(1.8));
}

TEST_CASE("per-group learning rates of a classifier") {
  MlpTopology t;
  t.input_dim = 2;
  t.trunk = {3};
  t.head = {};
  t.output_dim = 2;
  auto params = ParamVector::zeros(t);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Sgd;
  auto opt = Optimizer::for_classifier(cfg, params, 0.01, 1.0);
  std::vector<double> g(params.values.size(), 1.0);
  opt.step(params.values, g);
  CHECK(params.values.front() == doctest::Approx(-0.01));
  CHECK(params.values.back() == doctest::Approx(-1.0));
  opt.scale_learning_rates(0.5);
  CHECK(opt.groups()[1].lr == doctest::Approx(0.5));
}

TEST_CASE("gradient clipping caps the norm and is idempotent") {
  std::vector<double> g = {3.0, 4.0};
  CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  const auto once = g;
  clip_grad_norm(g, 1.0);
  CHECK(g == once);
  std::vector<double> small = {0.1, 0.1};
  const auto keep = small;
  clip_grad_norm(small, 1.0);
  CHECK(small == keep);
}

TEST_CASE("plateau scheduler reduces after patience stalled epochs") {
  PlateauScheduler s({0.5, 2, 1e-3});
  CHECK_FALSE(s.observe(1.0));
  CHECK_FALSE(s.observe(0.9995));  // within min_delta: no improvement
  CHECK(s.bad_epochs() == 1);
  CHECK(s.observe(0.9999));
  CHECK(s.bad_epochs() == 0);
  CHECK_FALSE(s.observe(0.5));
  CHECK(s.best() == 0.5);

  auto opt = Optimizer::single_group({}, 1, 1.0);
  PlateauScheduler t({0.1, 1, 0.0});
  t.step(1.0, opt);
  CHECK(t.step(2.0, opt));
  CHECK(opt.groups()[0].lr == doctest::Approx(0.1));
}

TEST_CASE("parameter checkpoints round-trip exactly") {
  const auto topo = tiny_topology(Activation::SiLU, 0.3);
  const auto p = init_params(topo, RngStream(8));
  std::stringstream ss;
  write_params(ss, p);
  const auto back = read_params(ss);
  CHECK(back == p);
  CHECK(topology_from_json(topology_to_json(topo)) == topo);

  std::stringstream truncated(ss.str().substr(0, ss.str().size() / 2));
  CHECK_THROWS(read_params(truncated));
}
