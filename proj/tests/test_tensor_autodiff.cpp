#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <tuple>
#include <random>

#include "doctest.h"
#include "ntm/autodiff.hpp"
#include "ntm/error.hpp"
#include "ntm/kernels.hpp"
#include "ntm/tensor.hpp"
#include "support/oracles.hpp"

using namespace ntm;
using namespace ntm::ad;
using ntm::testing::random_tensor;
using ntm::testing::triple_loop_matmul;

namespace {

Var sum_all(Var v) { return reduce(v, Reduction::sum, Axis::all); }

// Weighted sum keeps every output entry in the loss with a distinct weight.
Var weighted_sum(Graph& g, Var v, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return sum_all(mul(v, g.constant(random_tensor(v.value().rows(), v.value().cols(), gen, 0.5, 1.5))));
}

// Random point in [-2,2] with entries resampled away from zero.
Tensor away_from_kinks(std::size_t r, std::size_t c, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Tensor t(r, c);
  for (double& x : t.values()) {
    do x = dist(gen);
    while (std::abs(x) < 1e-3);
  }
  return t;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("construction and shape") {
    Tensor t(2, 3, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.shape_string() == "[2x3]");
    CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(t.item(), DimensionError);
    CHECK(Tensor::scalar(4.0).item() == 4.0);
    CHECK(Tensor::from_rows({{1, 2}, {3, 4}}).transposed() == Tensor::from_rows({{1, 3}, {2, 4}}));
  }

  TEST_CASE("finite check") {
    Tensor t(1, 2);
    CHECK(t.all_finite());
    t[1] = std::nan("");
    CHECK_FALSE(t.all_finite());
  }
}

TEST_SUITE("kernels") {
  TEST_CASE("matmul examples") {
    const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
    CHECK(kernels::matmul(Tensor::identity(2), a) == a);
    CHECK(kernels::matmul(a, Tensor::from_rows({{5, 6}, {7, 8}})) == Tensor::from_rows({{19, 22}, {43, 50}}));
    CHECK(kernels::matmul(Tensor(3, 2), a) == Tensor(3, 2));
  }

  TEST_CASE("matmul dimension error names both shapes") {
    try {
      kernels::matmul(Tensor(2, 3), Tensor(2, 3));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[2x3]", msg.find("[2x3]") + 1) != std::string::npos);
    }
  }

  TEST_CASE("matmul agrees with triple loop") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 50; ++trial) {
      const Tensor a = random_tensor(7, 5, gen);
      const Tensor b = random_tensor(5, 3, gen);
      CHECK(max_abs_difference(kernels::matmul(a, b), triple_loop_matmul(a, b)) <= 1e-12);
    }
  }

  TEST_CASE("serial and parallel kernels are bit-identical") {
    std::mt19937_64 gen(11);
    for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {17, 33, 9}, {130, 64, 70}}) {
      Tensor a = random_tensor(m, k, gen);
      a[0] = 0.0;  // exercises the zero-skip path
      const Tensor b = random_tensor(k, n, gen);
      CHECK(kernels::serial::matmul(a, b) == kernels::parallel::matmul(a, b));
      CHECK(kernels::serial::softmax_rows(a) == kernels::parallel::softmax_rows(a));
    }
  }

  TEST_CASE("softmax rows sum to one") {
    std::mt19937_64 gen(3);
    const Tensor s = kernels::softmax_rows(random_tensor(20, 13, gen, -30, 30));
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double total = 0.0;
      for (double v : s.row(r)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_SUITE("autodiff") {
  TEST_CASE("activation examples") {
    Graph g;
    CHECK(activation(g.constant(Tensor::scalar(0)), Activation::sigmoid).value().item() == 0.5);
    CHECK(activation(g.constant(Tensor::from_rows({{-1, 2}})), Activation::relu).value() ==
          Tensor::from_rows({{0, 2}}));
    CHECK(activation(g.constant(Tensor(1, 4)), Activation::softmax_rows).value() ==
          Tensor::from_rows({{0.25, 0.25, 0.25, 0.25}}));
    CHECK_THROWS_AS(activation(g.constant(Tensor::from_rows({{1, 0}})), Activation::log), DomainError);
    CHECK_THROWS_AS(activation(g.constant(Tensor::from_rows({{-1}})), Activation::log), DomainError);
  }

  TEST_CASE("relu subgradient at zero is zero") {
    Graph g;
    Var p = g.parameter(Tensor::from_rows({{0.0, 1.0, -1.0}}));
    const Gradients grads = g.backward(sum_all(activation(p, Activation::relu)));
    CHECK(grads[p] == Tensor::from_rows({{0.0, 1.0, 0.0}}));
  }

  TEST_CASE("normalize examples") {
    Graph g;
    CHECK(max_abs_difference(normalize_rows(g.constant(Tensor::from_rows({{3, 4}}))).value(),
                             Tensor::from_rows({{0.6, 0.8}})) <= 1e-15);
    CHECK(normalize_rows(g.constant(Tensor::from_rows({{0, 0}}))).value() == Tensor::from_rows({{0, 0}}));
    const Tensor unit = Tensor::from_rows({{1, 0, 0}});
    CHECK(normalize_rows(g.constant(unit)).value() == unit);
    CHECK(max_abs_difference(normalize_cols(g.constant(Tensor::from_rows({{3}, {4}}))).value(),
                             Tensor::from_rows({{0.6}, {0.8}})) <= 1e-15);
    CHECK(normalize_cols(g.constant(Tensor(2, 1))).value() == Tensor(2, 1));

    std::mt19937_64 gen(5);
    const Tensor a = random_tensor(4, 6, gen);
    CHECK(normalize_cols(g.constant(a.transposed())).value() ==
          normalize_rows(g.constant(a)).value().transposed());
  }

  TEST_CASE("normalized rows have unit norm or are the guarded input") {
    std::mt19937_64 gen(9);
    Graph g;
    for (int trial = 0; trial < 20; ++trial) {
      Tensor a = random_tensor(6, 5, gen);
      for (double& x : a.row(trial % 6)) x *= 1e-14;
      const Tensor n = normalize_rows(g.constant(a)).value();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        double sq = 0.0;
        for (double v : n.row(r)) sq += v * v;
        const bool guarded = std::equal(n.row(r).begin(), n.row(r).end(), a.row(r).begin());
        CHECK((std::abs(std::sqrt(sq) - 1.0) <= 1e-12 || guarded));
      }
    }
  }

  TEST_CASE("guarded rows get zero gradient") {
    Graph g;
    Var p = g.parameter(Tensor::from_rows({{0, 0}, {3, 4}}));
    const Gradients grads = g.backward(weighted_sum(g, normalize_rows(p), 1));
    CHECK(grads[p](0, 0) == 0.0);
    CHECK(grads[p](0, 1) == 0.0);
  }

  TEST_CASE("reduce examples") {
    Graph g;
    Var a = g.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
    CHECK(reduce(a, Reduction::sum, Axis::all).value().item() == 10.0);
    CHECK(reduce(a, Reduction::sum, Axis::rows).value() == Tensor::from_rows({{4, 6}}));
    CHECK(reduce(a, Reduction::sum, Axis::cols).value() == Tensor::from_rows({{3}, {7}}));
    CHECK(reduce(g.constant(Tensor(3, 5, 2.5)), Reduction::mean, Axis::all).value().item() == 2.5);
  }

  TEST_CASE("backward examples") {
    Graph g;
    Var p = g.parameter(Tensor::from_rows({{1, 2}}));
    Var unused = g.parameter(Tensor(2, 3, 7.0));
    CHECK(g.backward(sum_all(p))[p] == Tensor(1, 2, 1.0));
    const Gradients grads = g.backward(sum_all(mul(p, p)));
    CHECK(grads[p] == Tensor::from_rows({{2, 4}}));
    CHECK(grads[unused] == Tensor(2, 3));
    CHECK_THROWS_AS(g.backward(p), ContractError);
  }

  TEST_CASE("backward twice gives identical gradients") {
    std::mt19937_64 gen(2);
    Graph g;
    Var w = g.parameter(random_tensor(3, 4, gen));
    Var x = g.constant(random_tensor(5, 3, gen));
    Var loss = weighted_sum(g, activation(matmul(x, w), Activation::sigmoid), 4);
    CHECK(g.backward(loss)[w] == g.backward(loss)[w]);
  }

  TEST_CASE("matmul backward rule") {
    std::mt19937_64 gen(4);
    Graph g;
    Var a = g.parameter(random_tensor(3, 4, gen));
    Var b = g.parameter(random_tensor(4, 2, gen));
    const Tensor weights = random_tensor(3, 2, gen);
    const Gradients grads = g.backward(sum_all(mul(matmul(a, b), g.constant(weights))));
    CHECK(max_abs_difference(grads[a], triple_loop_matmul(weights, b.value().transposed())) <= 1e-12);
    CHECK(max_abs_difference(grads[b], triple_loop_matmul(a.value().transposed(), weights)) <= 1e-12);
  }

  TEST_CASE("grad_check examples") {
    const double linear = grad_check(
        [](Graph& g, std::span<const Var> p) {
          return sum_all(mul(p[0], g.constant(Tensor::from_rows({{1, -2, 3}}))));
        },
        {Tensor::from_rows({{0.3, -0.1, 2.0}})}, 1e-5);
    CHECK(linear < 1e-10);

    Graph g;
    Var x = g.parameter(Tensor::scalar(0.0));
    CHECK(g.backward(activation(x, Activation::sigmoid))[x].item() == doctest::Approx(0.25).epsilon(1e-15));
    const double sig = grad_check(
        [](Graph&, std::span<const Var> p) { return activation(p[0], Activation::sigmoid); },
        {Tensor::scalar(0.0)}, 1e-5);
    CHECK(sig < 1e-7);
  }

  TEST_CASE("every differentiable op matches finite differences") {
    std::mt19937_64 gen(2024);
    using Unary = std::function<Var(Graph&, Var)>;
    const std::vector<std::pair<const char*, Unary>> unary = {
        {"transpose", [](Graph&, Var a) { return transpose(a); }},
        {"scale", [](Graph&, Var a) { return scale(a, -1.7); }},
        {"add_scalar", [](Graph&, Var a) { return add_scalar(a, 0.4); }},
        {"sigmoid", [](Graph&, Var a) { return activation(a, Activation::sigmoid); }},
        {"relu", [](Graph&, Var a) { return activation(a, Activation::relu); }},
        {"identity", [](Graph&, Var a) { return activation(a, Activation::identity); }},
        {"softmax_rows", [](Graph&, Var a) { return activation(a, Activation::softmax_rows); }},
        {"exp", [](Graph&, Var a) { return activation(a, Activation::exp); }},
        {"log", [](Graph&, Var a) { return activation(activation(a, Activation::exp), Activation::log); }},
        {"normalize_rows", [](Graph&, Var a) { return normalize_rows(a); }},
        {"normalize_cols", [](Graph&, Var a) { return normalize_cols(a); }},
        {"clamp_min", [](Graph&, Var a) { return clamp_min(a, 0.0); }},
        {"mean_all", [](Graph&, Var a) { return reduce(a, Reduction::mean, Axis::all); }},
        {"sum_rows", [](Graph&, Var a) { return reduce(a, Reduction::sum, Axis::rows); }},
        {"mean_cols", [](Graph&, Var a) { return reduce(a, Reduction::mean, Axis::cols); }},
    };
    for (const auto& [name, op] : unary) {
      CAPTURE(name);
      for (int point = 0; point < 100; ++point) {
        const double err = grad_check(
            [&, op = op](Graph& g, std::span<const Var> p) { return weighted_sum(g, op(g, p[0]), 99); },
            {away_from_kinks(3, 4, gen)}, 1e-5);
        REQUIRE(err < 1e-4);
      }
    }

    using Binary = std::function<Var(Var, Var)>;
    const std::vector<std::tuple<const char*, Binary, std::array<std::size_t, 4>>> binary = {
        {"matmul", [](Var a, Var b) { return matmul(a, b); }, {3, 4, 4, 2}},
        {"add", [](Var a, Var b) { return add(a, b); }, {3, 4, 3, 4}},
        {"sub", [](Var a, Var b) { return sub(a, b); }, {3, 4, 3, 4}},
        {"mul", [](Var a, Var b) { return mul(a, b); }, {3, 4, 3, 4}},
        {"add_row", [](Var a, Var b) { return add_row(a, b); }, {3, 4, 1, 4}},
    };
    for (const auto& [name, op, shapes] : binary) {
      CAPTURE(name);
      for (int point = 0; point < 100; ++point) {
        const double err = grad_check(
            [&, op = op](Graph& g, std::span<const Var> p) { return weighted_sum(g, op(p[0], p[1]), 17); },
            {away_from_kinks(shapes[0], shapes[1], gen), away_from_kinks(shapes[2], shapes[3], gen)}, 1e-5);
        REQUIRE(err < 1e-4);
      }
    }
  }

  TEST_CASE("three-layer MLP matches finite differences") {
    std::mt19937_64 gen(31);
    const Tensor x = random_tensor(6, 5, gen);
    const double err = grad_check(
        [&](Graph& g, std::span<const Var> p) {
          Var h1 = activation(add_row(matmul(g.constant(x), p[0]), p[1]), Activation::sigmoid);
          Var h2 = activation(matmul(h1, p[2]), Activation::relu);
          Var out = activation(matmul(h2, p[3]), Activation::softmax_rows);
          return weighted_sum(g, activation(out, Activation::log), 3);
        },
        {random_tensor(5, 8, gen), random_tensor(1, 8, gen), random_tensor(8, 6, gen), random_tensor(6, 4, gen)},
        1e-5);
    CHECK(err < 1e-4);
  }

  TEST_CASE("shape mismatches raise dimension errors") {
    Graph g;
    CHECK_THROWS_AS(add(g.constant(Tensor(2, 2)), g.constant(Tensor(2, 3))), DimensionError);
    CHECK_THROWS_AS(matmul(g.constant(Tensor(2, 2)), g.constant(Tensor(3, 2))), DimensionError);
    CHECK_THROWS_AS(add_row(g.constant(Tensor(2, 2)), g.constant(Tensor(2, 2))), DimensionError);
  }

  TEST_CASE("operations on finite inputs stay finite") {
    std::mt19937_64 gen(8);
    Graph g;
    Var a = g.parameter(random_tensor(5, 5, gen, -700, 700));
    Var s = activation(a, Activation::softmax_rows);
    Var sig = activation(a, Activation::sigmoid);
    CHECK(s.value().all_finite());
    CHECK(sig.value().all_finite());
    CHECK(g.backward(weighted_sum(g, add(s, sig), 1))[a].all_finite());
  }
}
