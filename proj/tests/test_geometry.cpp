#include "losnav/geometry.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/oracle_helpers.hpp"

namespace {

using losnav::bearing;
using losnav::cross;
using losnav::deg2rad;
using losnav::distance;
using losnav::dot;
using losnav::kPi;
using losnav::norm;
using losnav::Pose2D;
using losnav::Vec2;
using losnav::wrap_angle;

TEST(Vec2Ops, ComponentwiseArithmetic) {
  const Vec2 a{1.0, -2.0};
  const Vec2 b{0.5, 4.0};
  EXPECT_EQ((a + b), (Vec2{1.5, 2.0}));
  EXPECT_EQ((a - b), (Vec2{0.5, -6.0}));
  EXPECT_EQ((2.0 * a), (Vec2{2.0, -4.0}));
  EXPECT_EQ(dot(a, b), -7.5);
  EXPECT_EQ(cross(a, b), 5.0);
  EXPECT_EQ(norm(Vec2{3.0, 4.0}), 5.0);
  EXPECT_EQ(distance(Vec2{1.0, 1.0}, Vec2{4.0, 5.0}), 5.0);
}

TEST(Vec2Ops, FinitenessPredicate) {
  EXPECT_TRUE(losnav::is_finite(Vec2{0.0, -1e308}));
  EXPECT_FALSE(losnav::is_finite(Vec2{std::numeric_limits<double>::infinity(), 0.0}));
  EXPECT_FALSE(losnav::is_finite(Vec2{0.0, std::nan("")}));
}

TEST(Angles, DegreeConversion) {
  EXPECT_DOUBLE_EQ(deg2rad(180.0), kPi);
  EXPECT_DOUBLE_EQ(deg2rad(30.0), 0.5235987755982988);
  EXPECT_EQ(deg2rad(0.0), 0.0);
}

// Frozen values cross-checked against the repeated-subtraction oracle.
TEST(WrapAngle, PinnedValues) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);  // antipodal maps to +pi
  EXPECT_DOUBLE_EQ(wrap_angle(7.0), 0.7168146928204138);
  EXPECT_DOUBLE_EQ(wrap_angle(-9.5), 3.0663706143591725);
  EXPECT_DOUBLE_EQ(wrap_angle(3.0 * kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(2.0 * kPi), 0.0);
}

TEST(WrapAngle, AgreesWithSubtractionOracle) {
  std::mt19937 rng(20240601);
  for (int i = 0; i < 100000; ++i) {
    const double a = oracle::uniform(rng, -50.0, 50.0);
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(w, oracle::wrap_loop(a), 1e-12) << "input " << a;
    // The wrapped value differs from the input by an integer turn count.
    const double turns = (a - w) / (2.0 * kPi);
    EXPECT_NEAR(turns, std::round(turns), 1e-9) << "input " << a;
  }
}

TEST(WrapAngle, IdempotentOnWrappedValues) {
  std::mt19937 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double w = wrap_angle(oracle::uniform(rng, -20.0, 20.0));
    EXPECT_EQ(wrap_angle(w), w);
  }
}

TEST(WrapAngle, RejectsNonFinite) {
  EXPECT_THROW(wrap_angle(std::numeric_limits<double>::infinity()), losnav::InvalidAngleError);
  EXPECT_THROW(wrap_angle(std::nan("")), losnav::InvalidAngleError);
}

// Frozen value: atan2(4, 3) - pi/3, wrapped.
TEST(Bearing, PinnedValue) {
  const Pose2D mrp{{1.0, 2.0}, kPi / 3.0};
  EXPECT_NEAR(bearing(mrp, {4.0, 6.0}), -0.11990233319498544, 1e-15);
}

TEST(Bearing, CardinalDirections) {
  const Pose2D east{{0.0, 0.0}, 0.0};
  EXPECT_DOUBLE_EQ(bearing(east, {5.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(bearing(east, {0.0, 5.0}), kPi / 2.0);   // left is positive
  EXPECT_DOUBLE_EQ(bearing(east, {0.0, -5.0}), -kPi / 2.0);  // right is negative
  EXPECT_DOUBLE_EQ(bearing(east, {-5.0, 0.0}), kPi);
}

TEST(Bearing, AgreesWithRotationOracle) {
  std::mt19937 rng(99);
  for (int i = 0; i < 20000; ++i) {
    const Pose2D mrp{{oracle::uniform(rng, -5.0, 5.0), oracle::uniform(rng, -5.0, 5.0)},
                     wrap_angle(oracle::uniform(rng, -10.0, 10.0))};
    const Vec2 p{oracle::uniform(rng, -5.0, 5.0), oracle::uniform(rng, -5.0, 5.0)};
    if (distance(mrp.position, p) < 1e-6) continue;
    const double got = bearing(mrp, p);
    EXPECT_GT(got, -kPi);
    EXPECT_LE(got, kPi);
    EXPECT_NEAR(got, oracle::bearing_rotated(mrp, p), 1e-9);
  }
}

TEST(Bearing, RejectsCoincidentPoints) {
  const Pose2D mrp{{1.0, 1.0}, 0.0};
  EXPECT_THROW(bearing(mrp, {1.0, 1.0}), losnav::DegenerateBearingError);
  EXPECT_THROW(bearing(mrp, {1.0 + 1e-10, 1.0}), losnav::DegenerateBearingError);
}

}  // namespace
