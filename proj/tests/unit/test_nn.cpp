#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drl/nn.hpp"

using namespace drl;
using Catch::Approx;

TEST_CASE("mlp construction shapes and determinism") {
  Rng rng(42);
  nn::Mlp net({{10, 32, 10}, nn::Hidden::relu, nn::Output::identity}, rng);
  REQUIRE(net.layer_count() == 2);
  REQUIRE(net.weight(0)->value.rows() == 10);
  REQUIRE(net.weight(0)->value.cols() == 32);
  REQUIRE(net.weight(1)->value.rows() == 32);
  REQUIRE(net.weight(1)->value.cols() == 10);

  Rng rng_a(7), rng_b(7), rng_c(8);
  nn::Mlp a({{4, 3, 2}, nn::Hidden::tanh, nn::Output::identity}, rng_a);
  nn::Mlp b({{4, 3, 2}, nn::Hidden::tanh, nn::Output::identity}, rng_b);
  nn::Mlp c({{4, 3, 2}, nn::Hidden::tanh, nn::Output::identity}, rng_c);
  REQUIRE(a.weight(0)->value.data() == b.weight(0)->value.data());
  REQUIRE(a.weight(0)->value.data() != c.weight(0)->value.data());

  REQUIRE_THROWS_AS(nn::Mlp({{4, 0, 2}, nn::Hidden::relu, nn::Output::identity}, rng),
                    ConfigError);
  REQUIRE_THROWS_AS(nn::Mlp({{4}, nn::Hidden::relu, nn::Output::identity}, rng), ConfigError);
}

TEST_CASE("forward of a zero network and a single linear layer") {
  Rng rng(1);
  nn::Mlp net({{3, 2}, nn::Hidden::relu, nn::Output::identity}, rng);
  for (auto& v : net.weight(0)->value.data()) v = 0.0;
  Tensor in = rng.normal_tensor({5, 3});
  Tensor out = net.forward_values(in);
  for (double v : out.data()) REQUIRE(v == 0.0);

  // single layer reproduces matmul + bias
  nn::Mlp lin({{2, 2}, nn::Hidden::relu, nn::Output::identity}, rng);
  lin.weight(0)->value = Tensor({2, 2}, {1, 2, 3, 4});
  lin.bias(0)->value = Tensor({1, 2}, {10, 20});
  Tensor probe({1, 2}, {1, 1});
  Tensor got = lin.forward_values(probe);
  REQUIRE(got(0, 0) == 14.0);
  REQUIRE(got(0, 1) == 26.0);

  REQUIRE_THROWS_AS(net.forward_values(Tensor({2, 4})), DimensionError);
}

TEST_CASE("two-hidden-layer mlp gradient check") {
  Rng rng(77);
  nn::Mlp net({{3, 4, 4, 1}, nn::Hidden::relu, nn::Output::identity}, rng);
  Tensor in = rng.normal_tensor({6, 3});
  std::vector<double> target = rng.normal_vector(6);
  auto loss = [&] { return nn::mse_loss(net.forward(ad::constant(in)), Tensor::column(target)); };
  REQUIRE(ad::grad_check(loss, net.parameters(), 1e-5) < 1e-4);
}

TEST_CASE("mse loss values and gradient") {
  ad::NodePtr pred = ad::parameter(Tensor::column({0.0, 0.0}));
  Tensor target = Tensor::column({1.0, 3.0});
  ad::NodePtr loss = nn::mse_loss(pred, target);
  REQUIRE(loss->value.scalar_value() == Approx(5.0));

  ad::NodePtr same = nn::mse_loss(ad::constant(target), target);
  REQUIRE(same->value.scalar_value() == 0.0);

  // gradient = 2(pred - target)/n
  ad::backward(loss);
  REQUIRE(pred->grad[0] == Approx(2.0 * (0.0 - 1.0) / 2.0));
  REQUIRE(pred->grad[1] == Approx(2.0 * (0.0 - 3.0) / 2.0));

  Rng rng(3);
  ad::NodePtr p = ad::parameter(rng.normal_tensor({8, 1}));
  Tensor tg(rng.normal_tensor({8, 1}));
  REQUIRE(ad::grad_check([&] { return nn::mse_loss(p, tg); }, {p}, 1e-5) < 1e-6);

  REQUIRE_THROWS_AS(nn::mse_loss(ad::constant(Tensor({0, 1})), Tensor({0, 1})), DomainError);
}

TEST_CASE("bce loss values and gradient") {
  Tensor target = Tensor::column({1.0, 0.0, 1.0, 0.0});
  ad::NodePtr half = ad::constant(Tensor::column({0.5, 0.5, 0.5, 0.5}));
  REQUIRE(nn::bce_loss(half, target)->value.scalar_value() == Approx(std::log(2.0)));

  // perfect prediction lands at clamp scale
  ad::NodePtr perfect = ad::constant(Tensor::column({1.0, 0.0, 1.0, 0.0}));
  REQUIRE(nn::bce_loss(perfect, target)->value.scalar_value() < 1e-6);

  Rng rng(5);
  Tensor logits = rng.normal_tensor({8, 1});
  ad::NodePtr p = ad::parameter(logits);
  Tensor tg({8, 1});
  for (std::size_t i = 0; i < 8; ++i) tg[i] = i % 2 == 0 ? 1.0 : 0.0;
  auto loss = [&] { return nn::bce_loss(ad::sigmoid(p), tg); };
  REQUIRE(ad::grad_check(loss, {p}, 1e-5) < 1e-6);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ad::NodePtr p = ad::parameter(Tensor::vector({1.0, -2.0}));
  auto params = std::vector<ad::NodePtr>{p};
  nn::AdamState st = nn::adam_init(params);
  nn::adam_step(params, st, 0.1);
  REQUIRE(p->value[0] == 1.0);
  REQUIRE(p->value[1] == -2.0);
}

TEST_CASE("adam follows the descent direction on a constant gradient") {
  ad::NodePtr p = ad::parameter(Tensor::scalar(0.0));
  auto params = std::vector<ad::NodePtr>{p};
  nn::AdamState st = nn::adam_init(params);
  for (int k = 0; k < 200; ++k) {
    p->grad[0] = 2.5;  // positive gradient: parameter must move down
    nn::adam_step(params, st, 0.01);
  }
  REQUIRE(p->value[0] < -1.0);

  p->grad[0] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(nn::adam_step(params, st, 0.01), NumericError);
}

TEST_CASE("adam minimizes (x-3)^2") {
  ad::NodePtr x = ad::parameter(Tensor::scalar(0.0));
  auto params = std::vector<ad::NodePtr>{x};
  nn::AdamState st = nn::adam_init(params);
  for (int k = 0; k < 2000; ++k) {
    ad::NodePtr diff = ad::sub(x, ad::constant(Tensor::scalar(3.0)));
    ad::NodePtr loss = ad::mul(diff, diff);
    ad::backward(loss);
    nn::adam_step(params, st, 0.05);
    ad::zero_grads(params);
  }
  REQUIRE(std::abs(x->value[0] - 3.0) < 1e-3);
}
