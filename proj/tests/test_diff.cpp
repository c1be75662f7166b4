#include <doctest.h>

#include <cmath>
#include <functional>

#include "abrlab/diff.hpp"
#include "abrlab/rng.hpp"

using namespace abrlab;

namespace {

// Central finite differences over every parameter; rel err vs tape gradient.
double max_rel_error_vs_fd(ParamSet& params,
                           const std::function<double(const ParamSet&)>& loss,
                           const Gradient& grad, double h = 1e-5) {
  double worst = 0.0;
  auto flat = params.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + h;
    const double up = loss(params);
    flat[i] = keep - h;
    const double down = loss(params);
    flat[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double g = grad.flat[i];
    const double denom = std::max({std::abs(fd), std::abs(g), 1e-8});
    worst = std::max(worst, std::abs(fd - g) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("dense layer forward: identity and zero-weight cases") {
  auto layout = std::make_shared<ParamLayout>();
  const int w = layout->add("w", 2, 2);
  const int b = layout->add("b", 2, 1);
  ParamSet p(layout);
  p.seg(w)[0] = 1.0;
  p.seg(w)[3] = 1.0;  // identity
  Tape tape;
  tape.reset(p);
  const double x[2] = {1.0, 2.0};
  int y = tape.affine(tape.input({x, 2}), w, b);
  CHECK(tape.value(y)[0] == 1.0);
  CHECK(tape.value(y)[1] == 2.0);

  ParamSet pz(layout);
  pz.seg(b)[0] = 3.0;
  pz.seg(b)[1] = 3.0;
  tape.reset(pz);
  y = tape.affine(tape.input({x, 2}), w, b);
  CHECK(tape.value(y)[0] == 3.0);
  CHECK(tape.value(y)[1] == 3.0);
}

TEST_CASE("dense backward matches central finite differences") {
  auto layout = std::make_shared<ParamLayout>();
  const int w = layout->add("w", 4, 3);
  const int b = layout->add("b", 4, 1);
  ParamSet p(layout);
  RngStream rng(2, "init");
  for (double& v : p.flat()) v = rng.normal();
  const std::vector<double> x = gaussian_vector(rng, 3);
  const std::vector<double> coef = gaussian_vector(rng, 4);  // random linear readout

  auto loss = [&](const ParamSet& ps) {
    Tape t;
    t.reset(ps);
    const int y = t.affine(t.input(x), w, b);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += coef[static_cast<std::size_t>(i)] * t.value(y)[static_cast<std::size_t>(i)];
    return acc;
  };

  Tape tape;
  tape.reset(p);
  const int y = tape.affine(tape.input(x), w, b);
  std::vector<int> picks;
  for (int i = 0; i < 4; ++i) {
    picks.push_back(tape.scale(tape.pick(y, i), coef[static_cast<std::size_t>(i)]));
  }
  const int l = tape.sum_of(picks);
  Gradient grad(layout);
  tape.backward(l, grad);
  CHECK(max_rel_error_vs_fd(p, loss, grad) < 1e-6);
}

TEST_CASE("relu forward and subgradient convention at zero") {
  auto layout = std::make_shared<ParamLayout>();
  const int w = layout->add("w", 3, 3);
  const int b = layout->add("b", 3, 1);
  ParamSet p(layout);
  for (int i = 0; i < 3; ++i) p.seg(w)[static_cast<std::size_t>(4 * i)] = 1.0;
  Tape tape;
  tape.reset(p);
  const double x[3] = {-1.0, 0.0, 2.0};
  const int y = tape.relu(tape.affine(tape.input({x, 3}), w, b));
  CHECK(tape.value(y)[0] == 0.0);
  CHECK(tape.value(y)[1] == 0.0);
  CHECK(tape.value(y)[2] == 2.0);
  Gradient grad(layout);
  tape.backward(tape.sum_elems(y), grad);
  // d/db of relu(x + b) at x = (-1, 0, 2): mask (0, 0, 1)
  CHECK(grad.seg(b)[0] == 0.0);
  CHECK(grad.seg(b)[1] == 0.0);
  CHECK(grad.seg(b)[2] == 1.0);
}

TEST_CASE("relu-of-dense gradient matches finite differences") {
  auto layout = std::make_shared<ParamLayout>();
  const int w = layout->add("w", 5, 4);
  const int b = layout->add("b", 5, 1);
  ParamSet p(layout);
  RngStream rng(3, "init");
  for (double& v : p.flat()) v = rng.normal();
  const std::vector<double> x = gaussian_vector(rng, 4);

  auto loss = [&](const ParamSet& ps) {
    Tape t;
    t.reset(ps);
    return t.scalar(t.sum_elems(t.relu(t.affine(t.input(x), w, b))));
  };
  Tape tape;
  tape.reset(p);
  const int l = tape.sum_elems(tape.relu(tape.affine(tape.input(x), w, b)));
  Gradient grad(layout);
  tape.backward(l, grad);
  CHECK(max_rel_error_vs_fd(p, loss, grad) < 1e-6);
}

TEST_CASE("softmax: symmetry, overflow stability, normalization") {
  Tape tape;
  ParamSet dummy(std::make_shared<ParamLayout>());
  tape.reset(dummy);
  const double z[3] = {0.0, 0.0, 0.0};
  int y = tape.softmax(tape.input({z, 3}));
  for (int i = 0; i < 3; ++i) CHECK(tape.value(y)[static_cast<std::size_t>(i)] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const double big[2] = {1000.0, 0.0};
  y = tape.softmax(tape.input({big, 2}));
  CHECK(tape.value(y)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isfinite(tape.value(y)[1]));

  RngStream rng(4, "probe");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v = gaussian_vector(rng, 6);
    for (double& e : v) e *= 10.0;
    y = tape.softmax(tape.input(v));
    double sum = 0.0;
    for (double e : tape.value(y)) {
      CHECK(e >= 0.0);
      sum += e;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  const double inf_in[2] = {1.0, 2.0};
  (void)inf_in;
  std::vector<double> bad = {1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(tape.input(bad), NonFiniteInput);
}

TEST_CASE("softmax gradient matches finite differences") {
  auto layout = std::make_shared<ParamLayout>();
  const int w = layout->add("w", 4, 4);
  const int b = layout->add("b", 4, 1);
  ParamSet p(layout);
  RngStream rng(5, "init");
  for (double& v : p.flat()) v = 0.5 * rng.normal();
  const std::vector<double> x = gaussian_vector(rng, 4);
  const std::vector<double> coef = gaussian_vector(rng, 4);

  auto build = [&](Tape& t) {
    const int y = t.softmax(t.affine(t.input(x), w, b));
    std::vector<int> picks;
    for (int i = 0; i < 4; ++i) picks.push_back(t.scale(t.pick(y, i), coef[static_cast<std::size_t>(i)]));
    return t.sum_of(picks);
  };
  auto loss = [&](const ParamSet& ps) {
    Tape t;
    t.reset(ps);
    return t.scalar(build(t));
  };
  Tape tape;
  tape.reset(p);
  Gradient grad(layout);
  tape.backward(build(tape), grad);
  CHECK(max_rel_error_vs_fd(p, loss, grad) < 1e-6);
}

TEST_CASE("backward: linear loss gives all-ones bias gradient; untouched segments stay zero") {
  auto layout = std::make_shared<ParamLayout>();
  const int w = layout->add("w", 3, 3);
  const int b = layout->add("b", 3, 1);
  const int unused = layout->add("unused", 2, 2);
  ParamSet p(layout);
  for (int i = 0; i < 3; ++i) p.seg(w)[static_cast<std::size_t>(4 * i)] = 1.0;
  Tape tape;
  tape.reset(p);
  const double x[3] = {0.5, -0.25, 2.0};
  const int l = tape.sum_elems(tape.affine(tape.input({x, 3}), w, b));
  Gradient grad(layout);
  tape.backward(l, grad);
  for (double g : grad.seg(b)) CHECK(g == 1.0);
  for (double g : grad.seg(unused)) CHECK(g == 0.0);
}

TEST_CASE("clip and min2 compose to the clipped-surrogate term") {
  Tape tape;
  ParamSet p(std::make_shared<ParamLayout>());
  tape.reset(p);
  // min(ratio * A, clip(ratio, 0.8, 1.2) * A) with ratio 1.5, A = 1
  const int r = tape.input(std::vector<double>{1.5});
  const int term = tape.min2(tape.scale(r, 1.0), tape.scale(tape.clip(r, 0.8, 1.2), 1.0));
  CHECK(tape.scalar(term) == 1.2);
  // negative advantage flips the min to the unclipped branch
  const int term2 = tape.min2(tape.scale(r, -1.0), tape.scale(tape.clip(r, 0.8, 1.2), -1.0));
  CHECK(tape.scalar(term2) == -1.5);
}

TEST_CASE("tape errors: empty backward, shape mismatches") {
  Tape tape;
  ParamSet p(std::make_shared<ParamLayout>());
  Gradient g(p.layout());
  CHECK_THROWS_AS(tape.backward(0, g), TapeEmpty);
  tape.reset(p);
  const int a = tape.input(std::vector<double>{1.0, 2.0});
  const int b = tape.input(std::vector<double>{1.0});
  CHECK_THROWS_AS(tape.add(a, b), ShapeMismatch);
  CHECK_THROWS_AS(tape.backward(a, g), ShapeMismatch);  // non-scalar loss
}

TEST_CASE("flat round-trip is the identity") {
  auto layout = std::make_shared<ParamLayout>();
  layout->add("a", 3, 5);
  layout->add("b", 7, 1);
  ParamSet p(layout);
  RngStream rng(8, "init");
  for (double& v : p.flat()) v = rng.normal();
  std::vector<double> flattened(p.flat().begin(), p.flat().end());
  ParamSet q(layout);
  std::copy(flattened.begin(), flattened.end(), q.flat().begin());
  for (std::size_t i = 0; i < flattened.size(); ++i) CHECK(p.flat()[i] == q.flat()[i]);
  CHECK(p.flat_len() == 3 * 5 + 7);
}

TEST_CASE("composed random network gradient-check property") {
  // dense -> relu -> dense -> softmax -> entropy-like readout
  auto layout = std::make_shared<ParamLayout>();
  const int w1 = layout->add("w1", 6, 5);
  const int b1 = layout->add("b1", 6, 1);
  const int w2 = layout->add("w2", 4, 6);
  const int b2 = layout->add("b2", 4, 1);
  RngStream rng(13, "init");
  for (int rep = 0; rep < 5; ++rep) {
    ParamSet p(layout);
    for (double& v : p.flat()) v = 0.7 * rng.normal();
    const std::vector<double> x = gaussian_vector(rng, 5);
    auto build = [&](Tape& t) {
      const int h = t.relu(t.affine(t.input(x), w1, b1));
      const int probs = t.softmax(t.affine(h, w2, b2));
      const int logp = t.log(t.pick(probs, 1));
      const int sq = t.square(t.add_const(t.exp(t.scale(logp, 0.5)), -0.3));
      std::vector<int> parts = {sq, t.entropy(probs)};
      return t.sum_of(parts);
    };
    auto loss = [&](const ParamSet& ps) {
      Tape t;
      t.reset(ps);
      (void)ps;
      return t.scalar(build(t));
    };
    Tape tape;
    tape.reset(p);
    Gradient grad(layout);
    tape.backward(build(tape), grad);
    CHECK(max_rel_error_vs_fd(p, loss, grad) < 1e-4);
  }
}
