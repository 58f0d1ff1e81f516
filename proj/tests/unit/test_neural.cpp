// Copyright 2026 The pmdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "pmdlab/autodiff.hpp"
#include "pmdlab/errors.hpp"
#include "pmdlab/mlp.hpp"
#include "pmdlab/optimizer.hpp"

using namespace pmdlab;
using namespace pmdlab::nn;
using doctest::Approx;

TEST_CASE("softmax") {
  Matrix z(3, 2);
  z << 0.0, 0.0, 7.5, 7.5, std::log(3.0), 0.0;
  const Matrix p = softmax_rows(z);
  CHECK(p(0, 0) == Approx(0.5));
  CHECK(p(1, 1) == Approx(0.5));
  CHECK(p(2, 0) == Approx(0.75));
  CHECK(p(2, 1) == Approx(0.25));
  Matrix big(1, 2);
  big << 1000.0, 0.0;
  CHECK(softmax_rows(big)(0, 0) == 1.0);
}

TEST_CASE("zero parameters give the uniform policy") {
  PolicyHead head(MlpParams({4, 8, 3}));
  Matrix obs = Matrix::Random(5, 4);
  const Matrix p = head.probs(obs);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == Approx(1.0 / 3.0));
  const auto dist = policy_dist(head, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  CHECK(dist.size() == 3);
  CHECK_THROWS_AS(policy_dist(head, std::vector<double>{0.1}), PreconditionError);
}

TEST_CASE("gradients of simple losses") {
  Rng rng(1);
  const auto params = testing::random_mlp({3, 4, 2}, rng, 0.7);
  SUBCASE("half squared norm of the parameters") {
    const auto g = grad(
        [](Tape& tape, const BoundMlp& net) {
          Var total = tape.constant(Matrix::Zero(1, 1));
          for (const Var& w : net.weights) total = add(total, scale(sum(mul(w, w)), 0.5));
          for (const Var& b : net.biases) total = add(total, scale(sum(mul(b, b)), 0.5));
          return total;
        },
        params);
    CHECK((g.flatten() - params.flatten()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("constant loss") {
    const auto g = grad([](Tape& tape, const BoundMlp&) { return tape.constant(Matrix::Constant(1, 1, 3.0)); },
                        params);
    CHECK(g.flatten().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("non-finite loss") {
    CHECK_THROWS_AS(grad([](Tape& tape, const BoundMlp&) {
                      return tape.constant(Matrix::Constant(1, 1, std::numeric_limits<double>::infinity()));
                    },
                    params),
                    NumericalError);
  }
}

TEST_CASE("network gradients match central differences") {
  Rng rng(2);
  for (int draw = 0; draw < 20; ++draw) {
    const auto params = testing::random_mlp({3, 5, 4, 2}, rng, 0.8);
    Matrix x(6, 3), w(6, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
    // A scalar loss mixing every primitive the losses use.
    const auto loss = [&](Tape& tape, const BoundMlp& net) {
      Var out = forward(net, tape.constant(x));
      Var p = softmax_rows(out);
      Var a = mul(p, tape.constant(w));
      Var b = log(clamp_min(p, 1e-12));
      Var c = pow(p, 1.5);
      Var m = minimum(out, scale(out, -0.5));
      return add(add(mean(a), mean(mul(p, b))), add(sum(c), add(mean(row_max(m)), mean(exp(scale(out, 0.1))))));
    };
    const auto g = grad(loss, params);
    MlpParams probe = params;
    const auto f = [&](const Vector& flat) {
      probe.assign(flat);
      Tape tape;
      return loss(tape, bind(tape, probe, false)).scalar();
    };
    const Vector fd = testing::central_difference(f, params.flatten());
    CHECK(testing::max_relative_error(g.flatten(), fd, 1e-6) <= 1e-4);
  }
}

TEST_CASE("plain and taped forward passes agree") {
  Rng rng(3);
  const auto params = testing::random_mlp({4, 6, 3}, rng, 1.0);
  Matrix x = Matrix::Random(7, 4);
  Tape tape;
  const Matrix taped = forward(bind(tape, params, true), tape.constant(x)).value();
  CHECK((taped - params.forward(x)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("orthogonal initialization is seeded") {
  Rng r1(9), r2(9), r3(10);
  const auto a = MlpParams::orthogonal({4, 64, 64, 2}, std::sqrt(2.0), 0.01, r1);
  const auto b = MlpParams::orthogonal({4, 64, 64, 2}, std::sqrt(2.0), 0.01, r2);
  const auto c = MlpParams::orthogonal({4, 64, 64, 2}, std::sqrt(2.0), 0.01, r3);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  // Hidden weights have orthonormal rows (or columns) scaled by the gain.
  const Matrix& w = a.layers()[1].weight;
  const Matrix gram = w * w.transpose() / 2.0;
  CHECK((gram - Matrix::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.layers()[0].bias.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flatten and assign round-trip") {
  Rng rng(4);
  const auto p = testing::random_mlp({2, 3, 2}, rng, 1.0);
  CHECK(p.parameter_count() == 2 * 3 + 3 + 3 * 2 + 2);
  MlpParams q({2, 3, 2});
  q.assign(p.flatten());
  CHECK(q == p);
  CHECK_THROWS_AS(q.assign(Vector::Zero(3)), PreconditionError);
  CHECK(mlp_from_json(to_json(p)) == p);
}

TEST_CASE("gradient clipping") {
  Vector g(2);
  g << 6.0, 8.0;
  CHECK(clip_by_global_norm(g, 1.0) == Approx(10.0));
  CHECK(g[0] == Approx(0.6));
  CHECK(g[1] == Approx(0.8));
  Vector small(2);
  small << 0.3, 0.4;
  clip_by_global_norm(small, 1.0);
  CHECK(small[0] == 0.3);
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto state = OptimizerState::for_size(3);
    Vector x = Vector::Constant(3, 1.5);
    adam_step(state, x, Vector::Zero(3), 1.0);
    CHECK(x == Vector::Constant(3, 1.5));
  }
  SUBCASE("first step moves by about the learning rate") {
    auto state = OptimizerState::for_size(1);
    Vector x = Vector::Constant(1, 2.0);
    adam_step(state, x, Vector::Constant(1, 0.3), 0.0);
    // m_hat = 0.3, v_hat = 0.09: step = lr * 0.3 / (0.3 + eps)
    CHECK(x[0] == Approx(2.0 - 0.0025 * 0.3 / (0.3 + 1e-8)).epsilon(1e-15));
  }
  SUBCASE("clipping happens before the moments") {
    auto clipped = OptimizerState::for_size(2);
    auto direct = OptimizerState::for_size(2);
    Vector x = Vector::Zero(2), y = Vector::Zero(2);
    Vector g(2);
    g << 6.0, 8.0;
    adam_step(clipped, x, g, 1.0);
    adam_step(direct, y, g / 10.0, 0.0);
    CHECK((x - y).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(clipped.m[1] == Approx(0.1 * 0.8));
  }
  SUBCASE("hand-evaluated second step") {
    auto state = OptimizerState::for_size(1);
    Vector x = Vector::Zero(1);
    adam_step(state, x, Vector::Constant(1, 1.0), 0.0);
    adam_step(state, x, Vector::Constant(1, -1.0), 0.0);
    const double m = 0.9 * 0.1 * 1.0 + 0.1 * -1.0;
    const double v = 0.999 * 0.001 + 0.001;
    const double m_hat = m / (1.0 - 0.81);
    const double v_hat = v / (1.0 - 0.999 * 0.999);
    const double expected = -0.0025 * (1.0 / (1.0 + 1e-8)) - 0.0025 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(x[0] == Approx(expected).epsilon(1e-12));
  }
  SUBCASE("errors") {
    auto state = OptimizerState::for_size(2);
    Vector x = Vector::Zero(2);
    Vector bad(2);
    bad << 1.0, std::nan("");
    CHECK_THROWS_AS(adam_step(state, x, bad, 1.0), NumericalError);
    CHECK_THROWS_AS(adam_step(state, x, Vector::Zero(3), 1.0), PreconditionError);
  }
}

TEST_CASE("Polyak update") {
  MlpParams target({1, 1}), online({1, 1});
  Vector t(2), o(2);
  t << 1.0, 1.0;
  o << 0.0, 0.0;
  target.assign(t);
  online.assign(o);
  CHECK(polyak_update(target, online, 1.0) == target);
  CHECK(polyak_update(target, online, 0.0) == online);
  CHECK(polyak_update(target, online, 0.95).flatten()[0] == Approx(0.95));
}

TEST_CASE("twin critic minima") {
  Rng rng(6);
  TwinCritic c;
  c.q1 = testing::random_mlp({2, 3, 2}, rng, 1.0);
  c.q2 = testing::random_mlp({2, 3, 2}, rng, 1.0);
  c.target1 = testing::random_mlp({2, 3, 2}, rng, 1.0);
  c.target2 = testing::random_mlp({2, 3, 2}, rng, 1.0);
  Matrix obs = Matrix::Random(4, 2);
  const Matrix a = c.q1.forward(obs), b = c.q2.forward(obs);
  const Matrix m = c.min_online(obs);
  for (Eigen::Index i = 0; i < m.size(); ++i) CHECK(m(i) == std::min(a(i), b(i)));
  const Matrix ta = c.target1.forward(obs), tb = c.target2.forward(obs);
  const Matrix tm = c.min_target(obs);
  for (Eigen::Index i = 0; i < tm.size(); ++i) CHECK(tm(i) == std::min(ta(i), tb(i)));
}
