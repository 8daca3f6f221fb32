#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sparcs/error.hpp"
#include "sparcs/network.hpp"

using sparcs::Matrix;

TEST_CASE("scalar identity path at perceptron init") {
  const auto p = oracle::scalar_params({1, 1}, {0, 0, 1});
  const auto w = sparcs::weight_blocks(p);
  CHECK(w.at(1, 0)(0, 0) == 0.0);
  CHECK(w.at(2, 1)(0, 0) == -1.0);
  CHECK(w.at(2, 0)(0, 0) == 1.0);
  CHECK(sparcs::predict(p, Matrix{{5}}) == Matrix{{5}});
}

TEST_CASE("three-layer rule y = W31 x + W32 relu(W21 x)") {
  const auto p = oracle::scalar_params({2, 3}, {1, 4, 5});
  // W21 = -6, W32 = -3, W31 = 6
  for (double x : {-2.0, -0.5, 0.0, 0.25, 3.0}) {
    const double want = 6 * x + -3 * std::max(0.0, -6 * x);
    CHECK(sparcs::predict(p, Matrix{{x}})(0, 0) == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("forward matches the dense adjacency update rule") {
  for (int t = 0; t < 20; ++t) {
    sparcs::Rng rng(40 + t);
    const auto p = oracle::random_config(rng, 1 + rng.below(4), 6);
    const Matrix x = Matrix::gaussian(5, p.layers[0], rng);
    CHECK(oracle::max_diff(sparcs::predict(p, x), oracle::dense_forward(p, x)) < 1e-10);
  }
}

TEST_CASE("forward is bit-reproducible") {
  sparcs::Rng rng(4);
  const auto p = oracle::random_config(rng, 3, 5);
  const Matrix x = Matrix::gaussian(8, p.layers[0], rng);
  CHECK(sparcs::predict(p, x) == sparcs::predict(p, x));
}

TEST_CASE("perceptron init is linear in the input") {
  for (std::size_t b = 1; b <= 4; ++b) {
    sparcs::Rng rng(60 + b);
    std::vector<std::size_t> sizes(b + 1);
    for (auto& n : sizes) n = 1 + rng.below(6);
    const auto p = sparcs::init_perceptron(sparcs::LayerSizes(sizes), b);
    const Matrix x1 = Matrix::gaussian(10, sizes[0], rng);
    const Matrix x2 = Matrix::gaussian(10, sizes[0], rng);
    const double a = rng.uniform(-3, 3), c = rng.uniform(-3, 3);
    const Matrix lhs = sparcs::predict(p, a * x1 + c * x2);
    const Matrix rhs = a * sparcs::predict(p, x1) + c * sparcs::predict(p, x2);
    CHECK(oracle::max_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("mse and its gradient") {
  const Matrix p{{1, 2}, {3, 4}};
  const Matrix y{{0, 2}, {3, 6}};
  CHECK(sparcs::mse(p, y) == doctest::Approx((1.0 + 0 + 0 + 4) / 4));
  CHECK(sparcs::mse_gradient(p, y) == Matrix{{0.5, 0}, {0, -1}});
}

TEST_CASE("analytic gradients match central differences") {
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    sparcs::Rng rng(900 + t);
    const auto p = oracle::random_config(rng, 1 + rng.below(3), 5);
    const Matrix x = Matrix::gaussian(6, p.layers[0], rng);
    const Matrix y = Matrix::gaussian(6, p.layers[p.depth()], rng);
    const auto trace = sparcs::forward(p, x);
    const auto g = sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y));
    const auto fd = sparcs::finite_difference_gradients(p, x, y, 1e-5);
    worst = std::max(worst, sparcs::compare_gradients(g, fd).worst_relative_error);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("away from kinks the gradients agree to 1e-8") {
  for (int t = 0; t < 10; ++t) {
    sparcs::Rng rng(70 + t);
    const auto p = sparcs::random_params({3, 4, 2}, rng);
    const Matrix x = Matrix::gaussian(7, 3, rng);
    const Matrix y = Matrix::gaussian(7, 2, rng);
    const auto trace = sparcs::forward(p, x);
    const auto g = sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y));
    const auto fd = sparcs::finite_difference_gradients(p, x, y, 1e-5);
    const auto a = g.flatten(), f = fd.grads.flatten();
    REQUIRE(a.size() == f.size());
    for (std::size_t k = 0; k < a.size(); ++k)
      if (!fd.kink_excluded[k]) CHECK(std::abs(a[k] - f[k]) < 1e-8);
  }
}

TEST_CASE("finite differences are second-order accurate") {
  // a hidden eigenvalue enters both the hidden pre-activation and the
  // outgoing bundles, so the loss is quartic in it and the error is O(eps^2)
  sparcs::Rng rng(33);
  const auto p = sparcs::random_params({3, 4, 2}, rng);
  const Matrix x = Matrix::gaussian(5, 3, rng);
  const Matrix y = Matrix::gaussian(5, 2, rng);
  const auto trace = sparcs::forward(p, x);
  const auto g = sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y));
  const auto coarse = sparcs::finite_difference_gradients(p, x, y, 1e-3);
  const auto fine = sparcs::finite_difference_gradients(p, x, y, 5e-4);
  const std::size_t offset = g.flatten().size() - 2 - 4;  // eig[1] sits before eig[2]
  double ec = 0.0, ef = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (coarse.kink_excluded[offset + n] || fine.kink_excluded[offset + n]) continue;
    ec = std::max(ec, std::abs(g.d_eig[1][n] - coarse.grads.d_eig[1][n]));
    ef = std::max(ef, std::abs(g.d_eig[1][n] - fine.grads.d_eig[1][n]));
  }
  REQUIRE(ec > 0.0);
  const double ratio = ec / ef;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
  CHECK_THROWS_AS(sparcs::finite_difference_gradients(p, x, y, 1e-2), sparcs::InputError);
}

TEST_CASE("frozen input eigenvalues get exactly zero gradient") {
  sparcs::Rng rng(12);
  auto p = sparcs::random_params({3, 4, 2}, rng);
  p.eig[0].assign(3, 0.0);
  p.frozen_input = true;
  const Matrix x = Matrix::gaussian(6, 3, rng);
  const Matrix y = Matrix::gaussian(6, 2, rng);
  const auto trace = sparcs::forward(p, x);
  const auto g = sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y));
  for (double v : g.d_eig[0]) CHECK(v == 0.0);
}

TEST_CASE("hidden eigenvalues reactivate from perceptron init") {
  // every hidden pre-activation sits exactly on the ReLU kink here; with
  // relu'(0) = 0 the gradient flows through the input-to-output skip bundle
  const auto p = sparcs::init_perceptron({2, 6, 1}, 3);
  sparcs::Rng rng(2);
  const Matrix x = Matrix::gaussian(16, 2, rng);
  Matrix y(16, 1);
  for (std::size_t r = 0; r < 16; ++r) y(r, 0) = x(r, 0) * x(r, 0) + x(r, 1) * x(r, 1);
  const auto trace = sparcs::forward(p, x);
  const auto g = sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y));
  auto skip_loss = [&](const sparcs::SpectralParams& q) {
    const Matrix w = oracle::block(q, oracle::dense_adjacency(q), 2, 0);
    return sparcs::mse(oracle::mul(x, w.transposed()), y);
  };
  const double h = 1e-6;
  double hidden = 0.0;
  for (std::size_t n = 0; n < 6; ++n) {
    auto up = p, down = p;
    up.eig[1][n] = h;
    down.eig[1][n] = -h;
    const double fd = (skip_loss(up) - skip_loss(down)) / (2 * h);
    CHECK(g.d_eig[1][n] == doctest::Approx(fd).epsilon(1e-7));
    hidden = std::max(hidden, std::abs(g.d_eig[1][n]));
  }
  CHECK(hidden > 1e-3);
}

TEST_CASE("gradients accumulate") {
  sparcs::Rng rng(3);
  const auto p = sparcs::random_params({2, 3, 1}, rng);
  auto a = sparcs::Gradients::zeros_like(p);
  for (double v : a.flatten()) CHECK(v == 0.0);
  const Matrix x = Matrix::gaussian(4, 2, rng);
  const auto trace = sparcs::forward(p, x);
  const auto g = sparcs::backward(p, trace, Matrix(4, 1, 1.0));
  a += g;
  a += g;
  const auto fa = a.flatten(), fg = g.flatten();
  for (std::size_t k = 0; k < fa.size(); ++k) CHECK(fa[k] == 2 * fg[k]);
}
