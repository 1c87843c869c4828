#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drl/autodiff.hpp"
#include "drl/rng.hpp"

using namespace drl;
using Catch::Approx;

namespace {

ad::NodePtr param_matrix(Rng& rng, std::size_t r, std::size_t c) {
  return ad::parameter(rng.normal_tensor({r, c}));
}

}  // namespace

TEST_CASE("tensor invariants") {
  Tensor t({2, 3});
  REQUIRE(t.numel() == 6);
  REQUIRE(t.all_finite());
  REQUIRE_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), DimensionError);
  REQUIRE_THROWS_AS(Tensor::scalar(1.0)(0, 1), ContractError);
  Tensor m({2, 2}, {1, 2, 3, 4});
  REQUIRE(m(1, 0) == 3.0);
  Tensor picked = m.take_rows({1, 0});
  REQUIRE(picked(0, 1) == 4.0);
}

TEST_CASE("matmul forward matches hand arithmetic") {
  // identity case
  Tensor i2({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {3, -1, 2, 7});
  ad::NodePtr prod = ad::matmul(ad::constant(i2), ad::constant(m));
  for (std::size_t i = 0; i < 4; ++i) REQUIRE(prod->value[i] == m[i]);

  // [[1,2],[3,4]] . [[1],[1]] = [[3],[7]]
  ad::NodePtr a = ad::constant(Tensor({2, 2}, {1, 2, 3, 4}));
  ad::NodePtr b = ad::constant(Tensor({2, 1}, {1, 1}));
  ad::NodePtr c = ad::matmul(a, b);
  REQUIRE(c->value(0, 0) == 3.0);
  REQUIRE(c->value(1, 0) == 7.0);

  REQUIRE_THROWS_AS(ad::matmul(a, ad::constant(Tensor({3, 1}))), DimensionError);
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(7);
  ad::NodePtr a = param_matrix(rng, 3, 4);
  ad::NodePtr b = param_matrix(rng, 4, 2);
  const double err = ad::grad_check([&] { return ad::sum(ad::matmul(a, b)); }, {a, b}, 1e-5);
  REQUIRE(err < 1e-6);
}

TEST_CASE("elementwise ops") {
  ad::NodePtr x = ad::parameter(Tensor::scalar(0.0));
  REQUIRE(ad::sigmoid(x)->value.scalar_value() == 0.5);

  // d/dx sigmoid at 0 is 0.25
  ad::NodePtr s = ad::sigmoid(x);
  ad::backward(ad::sum(s));
  REQUIRE(x->grad[0] == Approx(0.25));

  // relu backward masks negatives
  ad::NodePtr v = ad::parameter(Tensor::vector({-1.0, 2.0}));
  ad::backward(ad::sum(ad::relu(v)));
  REQUIRE(v->grad[0] == 0.0);
  REQUIRE(v->grad[1] == 1.0);

  ad::NodePtr y = ad::parameter(Tensor::vector({1.0, 2.0, 3.0}));
  REQUIRE_THROWS_AS(ad::add(y, ad::constant(Tensor::vector({1.0, 2.0}))), DimensionError);
}

TEST_CASE("log clamps small arguments") {
  ad::NodePtr x = ad::parameter(Tensor::vector({1e-12, 1.0}));
  ad::NodePtr l = ad::log(x);
  REQUIRE(l->value[0] == Approx(std::log(1e-7)));
  REQUIRE(l->value[1] == 0.0);
  ad::backward(ad::sum(l));
  REQUIRE(x->grad[0] == 0.0);  // flat below the clamp
  REQUIRE(x->grad[1] == Approx(1.0));
}

TEST_CASE("reductions") {
  ad::NodePtr v = ad::parameter(Tensor::vector({1.0, 2.0, 3.0}));
  REQUIRE(ad::mean(v)->value.scalar_value() == Approx(2.0));
  ad::backward(ad::sum(v));
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(v->grad[i] == 1.0);

  v->zero_grad();
  ad::backward(ad::mean(v));
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(v->grad[i] == Approx(1.0 / 3.0));

  REQUIRE_THROWS_AS(ad::mean(ad::constant(Tensor({0, 2}))), DomainError);

  Rng rng(3);
  ad::NodePtr m = param_matrix(rng, 4, 3);
  const double err = ad::grad_check([&] { return ad::mean(ad::mul(m, m)); }, {m}, 1e-5);
  REQUIRE(err < 1e-6);
}

TEST_CASE("concat_cols") {
  ad::NodePtr a = ad::parameter(Tensor({1, 1}, {1.0}));
  ad::NodePtr b = ad::parameter(Tensor({1, 1}, {2.0}));
  ad::NodePtr cat = ad::concat_cols(a, b);
  REQUIRE(cat->value(0, 0) == 1.0);
  REQUIRE(cat->value(0, 1) == 2.0);

  ad::backward(ad::sum(cat));
  REQUIRE(a->grad[0] == 1.0);
  REQUIRE(b->grad[0] == 1.0);

  // empty right block leaves the left operand unchanged
  ad::NodePtr left = ad::constant(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
  ad::NodePtr empty = ad::constant(Tensor({3, 0}));
  ad::NodePtr same = ad::concat_cols(left, empty);
  REQUIRE(same->value.same_shape(left->value));
  REQUIRE(same->value.data() == left->value.data());

  REQUIRE_THROWS_AS(ad::concat_cols(left, ad::constant(Tensor({2, 1}))), DimensionError);
}

TEST_CASE("backward basics and accumulation") {
  ad::NodePtr x = ad::parameter(Tensor::scalar(3.0));
  ad::backward(x);
  REQUIRE(x->grad[0] == 1.0);

  x->zero_grad();
  ad::backward(ad::mul(x, x));  // x^2 at 3
  REQUIRE(x->grad[0] == Approx(6.0));

  // second backward without zeroing doubles the gradient exactly
  ad::backward(ad::mul(x, x));
  REQUIRE(x->grad[0] == Approx(12.0));

  REQUIRE_THROWS_AS(ad::backward(ad::parameter(Tensor::vector({1.0, 2.0}))), ContractError);
}

TEST_CASE("three-layer MLP-shaped graph passes the finite-difference oracle") {
  Rng rng(11);
  ad::NodePtr x = ad::constant(rng.normal_tensor({5, 3}));
  ad::NodePtr w1 = param_matrix(rng, 3, 4);
  ad::NodePtr b1 = ad::parameter(Tensor({1, 4}));
  ad::NodePtr w2 = param_matrix(rng, 4, 4);
  ad::NodePtr b2 = ad::parameter(Tensor({1, 4}));
  ad::NodePtr w3 = param_matrix(rng, 4, 1);
  ad::NodePtr b3 = ad::parameter(Tensor({1, 1}));
  auto loss = [&] {
    ad::NodePtr h1 = ad::relu(ad::add_row(ad::matmul(x, w1), b1));
    ad::NodePtr h2 = ad::tanh(ad::add_row(ad::matmul(h1, w2), b2));
    ad::NodePtr out = ad::sigmoid(ad::add_row(ad::matmul(h2, w3), b3));
    return ad::mean(ad::mul(out, out));
  };
  const double err = ad::grad_check(loss, {w1, b1, w2, b2, w3, b3}, 1e-5);
  REQUIRE(err < 1e-4);
}

TEST_CASE("grad_check on a pure-linear function is near exact") {
  Rng rng(5);
  ad::NodePtr w = param_matrix(rng, 3, 2);
  ad::NodePtr x = ad::constant(rng.normal_tensor({4, 3}));
  const double err = ad::grad_check([&] { return ad::sum(ad::matmul(x, w)); }, {w}, 1e-5);
  REQUIRE(err < 1e-8);
  REQUIRE_THROWS_AS(ad::grad_check([&] { return ad::sum(ad::matmul(x, w)); }, {w}, 0.0),
                    DomainError);
}

TEST_CASE("forward pass is deterministic") {
  Rng rng(21);
  Tensor in = rng.normal_tensor({6, 3});
  ad::NodePtr w = param_matrix(rng, 3, 3);
  ad::NodePtr out1 = ad::tanh(ad::matmul(ad::constant(in), w));
  ad::NodePtr out2 = ad::tanh(ad::matmul(ad::constant(in), w));
  REQUIRE(out1->value.data() == out2->value.data());
}
