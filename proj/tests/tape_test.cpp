#include "dmp/tape.hpp"

#include <cmath>
#include <gtest/gtest.h>

#include "dmp/grad_check.hpp"
#include "dmp/rng.hpp"

namespace dmp {
namespace {

double grad_of(Tape& tape, const Value& out, const Value& wrt) {
  return tape.backward(out)[static_cast<std::size_t>(wrt.id)];
}

TEST(Primitives, ExpAtZero) {
  Tape tape;
  const Value x = tape.lift(0.0);
  const Value y = exp(x);
  EXPECT_DOUBLE_EQ(y.val(), 1.0);
  EXPECT_DOUBLE_EQ(grad_of(tape, y, x), 1.0);
}

TEST(Primitives, TanhAtZero) {
  Tape tape;
  const Value x = tape.lift(0.0);
  const Value y = tanh(x);
  EXPECT_DOUBLE_EQ(y.val(), 0.0);
  EXPECT_DOUBLE_EQ(grad_of(tape, y, x), 1.0);
}

TEST(Primitives, ProductRule) {
  // d/dx [x*sin(x)] at 1.3 = sin(1.3) + 1.3*cos(1.3)
  Tape tape;
  const Value x = tape.lift(1.3);
  const Value y = x * sin(x);
  EXPECT_NEAR(grad_of(tape, y, x), 1.3113066626291566, 1e-12);
}

TEST(Primitives, QuadraticGradient) {
  Tape tape;
  const Value x = tape.lift(3.0);
  const Value y = x * x;
  EXPECT_DOUBLE_EQ(grad_of(tape, y, x), 6.0);
}

TEST(Primitives, ConstantHasZeroUpstreamGradient) {
  Tape tape;
  const Value x = tape.lift(4.0);
  const Value y = tape.lift(2.5);
  const auto grad = tape.backward(y);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(y.id)], 1.0);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(x.id)], 0.0);
}

TEST(Primitives, Atan2MatchesFiniteDifference) {
  const auto f = [](const auto& v) {
    using std::atan2;
    return atan2(v[0], v[1]);
  };
  const double x[] = {0.7, -1.2};
  EXPECT_LT(grad_check(f, x), 1e-8);
}

TEST(Primitives, MixedScalarForms) {
  Tape tape;
  const Value x = tape.lift(2.0);
  const Value y = 3.0 * x + (1.0 - x) - x / 2.0 + 2.0 / x;
  // 6 + (-1) - 1 + 1 = 5
  EXPECT_DOUBLE_EQ(y.val(), 5.0);
  // 3 - 1 - 0.5 - 2/x^2 = 1
  EXPECT_DOUBLE_EQ(grad_of(tape, y, x), 1.0);
}

TEST(Primitives, MinSelectsLowestIndexOnTie) {
  Tape tape;
  const Value a = tape.lift(1.5);
  const Value b = tape.lift(1.5);
  const Value m = min(a, b);
  const auto grad = tape.backward(m);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(a.id)], 1.0);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(b.id)], 0.0);
}

TEST(Primitives, MaxSelectsLowestIndexOnTie) {
  Tape tape;
  const Value a = tape.lift(-0.5);
  const Value b = tape.lift(-0.5);
  const Value m = max(a, b);
  const auto grad = tape.backward(m);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(a.id)], 1.0);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(b.id)], 0.0);
}

TEST(Primitives, AbsSubgradientZeroAtZero) {
  Tape tape;
  const Value x = tape.lift(0.0);
  EXPECT_DOUBLE_EQ(grad_of(tape, abs(x), x), 0.0);
  const Value y = tape.lift(-2.0);
  EXPECT_DOUBLE_EQ(grad_of(tape, abs(y), y), -1.0);
}

TEST(Primitives, HypotConePointHasZeroSubgradient) {
  Tape tape;
  const Value dx = tape.lift(0.0);
  const Value dy = tape.lift(0.0);
  const Value d = hypot_xy(dx, dy);
  EXPECT_DOUBLE_EQ(d.val(), 0.0);
  const auto grad = tape.backward(d);
  EXPECT_DOUBLE_EQ(grad[static_cast<std::size_t>(dx.id)], 0.0);
  EXPECT_FALSE(std::isnan(grad[static_cast<std::size_t>(dy.id)]));
}

TEST(Primitives, WrapAngleKeepsUnitDerivative) {
  Tape tape;
  const Value x = tape.lift(3 * kPi / 2);
  const Value w = wrap_angle(x);
  EXPECT_DOUBLE_EQ(w.val(), -kPi / 2);
  EXPECT_DOUBLE_EQ(grad_of(tape, w, x), 1.0);
}

TEST(Primitives, SigmoidMatchesFiniteDifference) {
  const auto f = [](const auto& v) { return sigmoid(v[0] * 2.0); };
  const double x[] = {0.37};
  EXPECT_LT(grad_check(f, x), 1e-9);
}

TEST(DotAffine, MatchesUnfusedComposition) {
  Tape tape;
  std::vector<Value> w = {tape.lift(0.5), tape.lift(-1.5), tape.lift(2.0)};
  std::vector<Value> x = {tape.lift(1.0), tape.lift(2.0), tape.lift(-0.25)};
  const Value b = tape.lift(0.75);
  const Value fused = dot_affine(std::span<const Value>(w), std::span<const Value>(x), b);

  Value unfused = b;
  for (std::size_t i = 0; i < w.size(); ++i) unfused += w[i] * x[i];
  EXPECT_DOUBLE_EQ(fused.val(), unfused.val());

  const auto gf = tape.backward(fused);
  const auto gu = tape.backward(unfused);
  for (const auto& vals : {w, x}) {
    for (const auto& v : vals) {
      EXPECT_DOUBLE_EQ(gf[static_cast<std::size_t>(v.id)], gu[static_cast<std::size_t>(v.id)]);
    }
  }
  EXPECT_DOUBLE_EQ(gf[static_cast<std::size_t>(b.id)], 1.0);
}

TEST(Guards, DivisionByNearZero) {
  Tape tape;
  const Value a = tape.lift(1.0);
  const Value tiny = tape.lift(1e-13);
  EXPECT_THROW(a / tiny, NumericError);
  EXPECT_THROW(a / 0.0, NumericError);
}

TEST(Guards, SqrtOfNegative) {
  Tape tape;
  EXPECT_THROW(sqrt(tape.lift(-1e-9)), NumericError);
  EXPECT_DOUBLE_EQ(sqrt(tape.lift(0.0)).val(), 0.0);
}

TEST(Guards, NonFiniteResultNamesPrimitive) {
  Tape tape;
  const Value big = tape.lift(1000.0);
  try {
    exp(big);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos);
  }
}

TEST(Guards, MixingTapesRejected) {
  Tape t1, t2;
  const Value a = t1.lift(1.0);
  const Value b = t2.lift(2.0);
  EXPECT_THROW(a + b, std::invalid_argument);
  EXPECT_THROW(t1.backward(b), std::invalid_argument);
}

TEST(Backward, GradientBufferCoversAllNodes) {
  Tape tape;
  const Value x = tape.lift(1.0);
  const Value y = sin(x) * x + exp(x);
  const auto grad = tape.backward(y);
  EXPECT_EQ(grad.size(), tape.size());
}

TEST(Backward, LinearityOfGradients) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-3, 3);
    const double b = rng.uniform(-3, 3);
    const double x0 = rng.uniform(-2, 2);
    const double x1 = rng.uniform(-2, 2);
    const double x2 = rng.uniform(0.5, 2);

    Tape tape;
    std::vector<Value> v = {tape.lift(x0), tape.lift(x1), tape.lift(x2)};
    const Value f = sin(v[0]) * v[1] + tanh(v[2] * v[0]);
    const Value g = v[0] * v[1] * cos(v[2]) + exp(v[1] * 0.3);
    const Value combined = a * f + b * g;

    const auto gc = tape.backward(combined);
    const auto gf = tape.backward(f);
    const auto gg = tape.backward(g);
    for (const auto& vi : v) {
      const auto i = static_cast<std::size_t>(vi.id);
      EXPECT_NEAR(gc[i], a * gf[i] + b * gg[i], 1e-10);
    }
  }
}

TEST(Backward, DeterministicAcrossRuns) {
  const auto run = [](std::vector<double>* grads) {
    Tape tape;
    const Value x = tape.lift(0.917);
    const Value y = tape.lift(-1.3);
    Value acc = tape.lift(0.0);
    for (int i = 0; i < 40; ++i) {
      acc += sin(x * static_cast<double>(i)) * tanh(y) + exp(x * 0.01);
    }
    *grads = tape.backward(acc);
  };
  std::vector<double> g1, g2;
  run(&g1);
  run(&g2);
  ASSERT_EQ(g1.size(), g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_EQ(g1[i], g2[i]);  // bit-identical
  }
}

TEST(GradCheck, SumOfSquares) {
  Rng rng(22);
  std::vector<double> x(10);
  for (auto& xi : x) xi = rng.uniform(-5, 5);
  const auto f = [](const auto& v) {
    auto acc = v[0] * v[0];
    for (std::size_t i = 1; i < v.size(); ++i) acc += v[i] * v[i];
    return acc;
  };
  EXPECT_LT(grad_check(f, x), 1e-8);
}

TEST(GradCheck, RejectsNonFiniteProbe) {
  // f blows up inside the probe interval.
  const auto f = [](const auto& v) {
    using std::exp;
    return exp(v[0] * 2000.0);
  };
  const double x[] = {0.4};
  EXPECT_THROW(grad_check(f, x), NumericError);
}

TEST(TapeReuse, ResetClearsNodes) {
  Tape tape;
  const Value x = tape.lift(1.0);
  (void)(x * x);
  EXPECT_GT(tape.size(), 0u);
  tape.reset();
  EXPECT_EQ(tape.size(), 0u);
  const Value y = tape.lift(2.0);
  EXPECT_EQ(y.id, 0);
}

}  // namespace
}  // namespace dmp
