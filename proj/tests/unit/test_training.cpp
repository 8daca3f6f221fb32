#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sparcs/analysis.hpp"
#include "sparcs/datasets.hpp"
#include "sparcs/error.hpp"
#include "sparcs/training.hpp"

using sparcs::Matrix;
using sparcs::RegType;
using sparcs::TrainConfig;

namespace {

sparcs::Dataset family_data(double alpha, std::size_t n, bool bias) {
  sparcs::FamilyParams fp;
  fp.alpha = alpha;
  fp.beta = 1000;
  auto ds = sparcs::gen_family(fp, n, 42);
  if (bias) ds.x = sparcs::with_ones_column(ds.x);
  return ds;
}

double hidden_mean_abs(const sparcs::SpectralParams& p) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 1; j < p.depth(); ++j)
    for (double v : p.eig[j]) {
      s += std::abs(v);
      ++n;
    }
  return s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("regularizer values") {
  auto p = sparcs::init_perceptron({2, 2, 1}, 1);
  CHECK(sparcs::regularizer(p, RegType::L2) == 0.0);
  CHECK(sparcs::regularizer(p, RegType::L1) == 0.0);
  p.eig[1] = {3, -4};
  CHECK(0.1 * sparcs::regularizer(p, RegType::L2) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sparcs::regularizer(p, RegType::L1) == 7.0);
  // output eigenvalues are never penalized
  p.eig[2] = {100};
  CHECK(sparcs::regularizer(p, RegType::L1) == 7.0);
}

TEST_CASE("regularizer gradient") {
  auto p = sparcs::init_perceptron({2, 3, 1}, 1);
  p.eig[1] = {2, 0, -1};
  auto g = sparcs::Gradients::zeros_like(p);
  sparcs::add_regularizer_gradient(p, RegType::L2, 0.5, g);
  CHECK(g.d_eig[1] == std::vector<double>{2, 0, -1});
  auto h = sparcs::Gradients::zeros_like(p);
  sparcs::add_regularizer_gradient(p, RegType::L1, 0.5, h);
  CHECK(h.d_eig[1] == std::vector<double>{0.5, 0, -0.5});
  CHECK(h.d_eig[2] == std::vector<double>{0});
}

TEST_CASE("loss_total with rho = 0 is the data loss") {
  sparcs::Rng rng(1);
  auto p = sparcs::random_params({2, 3, 1}, rng);
  const Matrix x = Matrix::gaussian(5, 2, rng), y = Matrix::gaussian(5, 1, rng);
  TrainConfig c;
  c.reg_strength = 0.0;
  const auto l = sparcs::loss_total(p, x, y, c);
  CHECK(l.total == l.data);
  CHECK(l.data == sparcs::mse(sparcs::predict(p, x), y));
}

TEST_CASE("adam: zero gradient leaves parameters alone") {
  auto p = sparcs::init_perceptron({2, 3, 1}, 4);
  const auto before = p;
  auto st = sparcs::AdamState::for_params(p);
  sparcs::adam_step(st, p, sparcs::Gradients::zeros_like(p), TrainConfig{});
  CHECK(p == before);
}

TEST_CASE("adam: first step closed form") {
  auto p = oracle::scalar_params({0.5}, {0.0, 1.0});
  auto st = sparcs::AdamState::for_params(p);
  auto g = sparcs::Gradients::zeros_like(p);
  g.d_phi[0](0, 0) = 0.3;
  g.d_eig[1][0] = -2.0;
  TrainConfig c;
  c.learning_rate = 0.01;
  sparcs::adam_step(st, p, g, c);
  // m_hat = g, v_hat = g^2 after bias correction
  CHECK(p.phi[0](0, 0) == doctest::Approx(0.5 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
  CHECK(p.eig[1][0] == doctest::Approx(1.0 + 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  CHECK(st.step == 1);
}

TEST_CASE("adam converges on a scalar quadratic") {
  auto p = oracle::scalar_params({0.0}, {0.0, 1.0});
  auto st = sparcs::AdamState::for_params(p);
  TrainConfig c;
  c.learning_rate = 1e-2;
  int steps = 0;
  for (; steps < 2000; ++steps) {
    auto g = sparcs::Gradients::zeros_like(p);
    g.d_phi[0](0, 0) = 2.0 * (p.phi[0](0, 0) - 3.0);
    sparcs::adam_step(st, p, g, c);
  }
  CHECK(std::abs(p.phi[0](0, 0) - 3.0) < 1e-4);
}

TEST_CASE("frozen input eigenvalues never move") {
  auto p = sparcs::init_perceptron({2, 3, 1}, 4);
  auto st = sparcs::AdamState::for_params(p);
  auto g = sparcs::Gradients::zeros_like(p);
  g.d_eig[0] = {1.0, -1.0};
  for (int k = 0; k < 10; ++k) sparcs::adam_step(st, p, g, TrainConfig{});
  CHECK(p.eig[0] == std::vector<double>{0, 0});
}

TEST_CASE("a small step descends") {
  sparcs::Rng rng(5);
  auto p = sparcs::random_params({3, 4, 2}, rng);
  const Matrix x = Matrix::gaussian(20, 3, rng), y = Matrix::gaussian(20, 2, rng);
  TrainConfig c;
  c.reg_strength = 0.0;
  c.learning_rate = 1e-4;
  const double before = sparcs::loss_total(p, x, y, c).total;
  const auto trace = sparcs::forward(p, x);
  const auto g = sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y));
  auto st = sparcs::AdamState::for_params(p);
  sparcs::adam_step(st, p, g, c);
  CHECK(sparcs::loss_total(p, x, y, c).total < before);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), sparcs::ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), sparcs::ConfigError);
  CHECK(sparcs::parse_reg_type("L1") == RegType::L1);
  CHECK_THROWS_AS(sparcs::parse_reg_type("L3"), sparcs::ConfigError);
}

TEST_CASE("split is seeded and disjoint") {
  const auto ds = family_data(0.5, 50, false);
  const auto [a, b] = sparcs::split_dataset(ds, 0.2, 7);
  CHECK(a.size() == 40);
  CHECK(b.size() == 10);
  const auto [a2, b2] = sparcs::split_dataset(ds, 0.2, 7);
  CHECK(a.x == a2.x);
  CHECK(b.y == b2.y);
  for (std::size_t r = 0; r < b.size(); ++r)
    for (std::size_t s = 0; s < a.size(); ++s) CHECK_FALSE((b.x(r, 0) == a.x(s, 0) && b.x(r, 1) == a.x(s, 1)));
}

TEST_CASE("linear data keeps the hidden layer quiet, quadratic data recruits it") {
  TrainConfig c;
  c.epochs = 150;
  c.batch_size = 50;
  c.learning_rate = 1e-2;
  c.reg_strength = 1e-4;
  const auto lin = sparcs::train(sparcs::init_perceptron({3, 20, 1}, 1), family_data(0.0, 500, true), c);
  const auto quad = sparcs::train(sparcs::init_perceptron({3, 20, 1}, 1), family_data(1.0, 500, true), c);
  CHECK(lin.history.epochs.back().train_loss < 1e-3);
  CHECK(lin.history.epochs.back().regularizer < 1e-2 * 1.0);
  CHECK(hidden_mean_abs(quad.params) >= 10.0 * hidden_mean_abs(lin.params));
}

TEST_CASE("training history") {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 32;
  const auto ds = family_data(0.7, 200, true);
  const auto r1 = sparcs::train(sparcs::init_perceptron({3, 8, 1}, 3), ds, c);
  const auto r2 = sparcs::train(sparcs::init_perceptron({3, 8, 1}, 3), ds, c);
  REQUIRE(r1.history.epochs.size() == 5);
  std::ostringstream a, b;
  r1.history.write_csv(a);
  r2.history.write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(r1.params == r2.params);

  const auto& last = r1.history.epochs.back();
  CHECK(last.epoch == 5);
  CHECK(last.val_loss.has_value());
  CHECK(std::abs(last.regularizer - sparcs::regularizer(r1.params, RegType::L2)) < 1e-12);
  REQUIRE(last.gamma_norm.has_value());
  CHECK(*last.gamma_norm == doctest::Approx(sparcs::frobenius_norm(sparcs::gamma_tensor(r1.params))).epsilon(1e-12));
  REQUIRE(last.eig.size() == 3);
  CHECK(last.eig[0].max_abs == 0.0);
  CHECK(a.str().rfind("epoch,train_loss,val_loss,regularizer,eig1_mean_abs", 0) == 0);

  auto deep = sparcs::train(sparcs::init_perceptron({3, 4, 4, 1}, 3), ds, c);
  CHECK_FALSE(deep.history.epochs.back().gamma_norm.has_value());
}

TEST_CASE("a diverging run names the epoch and batch") {
  auto ds = family_data(0.5, 100, true);
  for (double& v : ds.y.data()) v *= 1e200;
  TrainConfig c;
  c.epochs = 3;
  c.learning_rate = 1e3;
  try {
    sparcs::train(sparcs::init_perceptron({3, 4, 1}, 1), ds, c);
    FAIL("expected a TrainingError");
  } catch (const sparcs::TrainingError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}
