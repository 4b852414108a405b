#include "seld/geometry.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace seld {
namespace {

constexpr double kAngleTol = 1e-6;

TEST(DirectionTest, NormalizesAzimuth) {
  EXPECT_DOUBLE_EQ(Direction(180.0, 0.0).azimuth(), -180.0);
  EXPECT_DOUBLE_EQ(Direction(190.0, 0.0).azimuth(), -170.0);
  EXPECT_DOUBLE_EQ(Direction(-190.0, 0.0).azimuth(), 170.0);
  EXPECT_DOUBLE_EQ(Direction(720.0, 10.0).azimuth(), 0.0);
  EXPECT_DOUBLE_EQ(Direction(-180.0, 0.0).azimuth(), -180.0);
}

TEST(DirectionTest, RejectsElevationOutOfRange) {
  EXPECT_THROW(Direction(0.0, 90.0001), InvalidDirection);
  EXPECT_THROW(Direction(0.0, -91.0), InvalidDirection);
  EXPECT_THROW(Direction(NAN, 0.0), InvalidDirection);
  EXPECT_NO_THROW(Direction(0.0, 90.0));
  EXPECT_NO_THROW(Direction(0.0, -90.0));
}

TEST(DirectionTest, UnitVectorRoundTrip) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double az = rng.uniform(-180.0, 180.0);
    const double el = rng.uniform(-89.9, 89.9);
    const Direction d(az, el);
    const auto v = d.unit_vector();
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    const auto back = Direction::from_vector(v);
    EXPECT_NEAR(back.elevation(), el, 1e-9);
    EXPECT_NEAR(std::abs(wrap_azimuth(back.azimuth() - d.azimuth())), 0.0, 1e-9);
  }
}

TEST(DirectionTest, PoleCanonicalizesAzimuth) {
  const auto up = Direction::from_vector(Direction(123.0, 90.0).unit_vector());
  EXPECT_DOUBLE_EQ(up.azimuth(), 0.0);
  EXPECT_DOUBLE_EQ(up.elevation(), 90.0);
  const auto down = Direction::from_vector(0.0, 0.0, -2.0);
  EXPECT_DOUBLE_EQ(down.azimuth(), 0.0);
  EXPECT_DOUBLE_EQ(down.elevation(), -90.0);
}

TEST(AngularDistanceTest, Examples) {
  EXPECT_NEAR(angular_distance(Direction(0, 0), Direction(0, 0)), 0.0, kAngleTol);
  EXPECT_NEAR(angular_distance(Direction(0, 0), Direction(180, 0)), 180.0, kAngleTol);
  // arccos(sin40 sin20 + cos40 cos20 cos30), evaluated independently.
  EXPECT_NEAR(angular_distance(Direction(30, 40), Direction(60, 20)), 32.514920075560, kAngleTol);
}

TEST(AngularDistanceTest, EquatorEqualsWrappedAzimuthDifference) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-180.0, 180.0);
    const double b = rng.uniform(-180.0, 180.0);
    double diff = std::abs(a - b);
    if (diff > 180.0) diff = 360.0 - diff;
    EXPECT_NEAR(angular_distance(Direction(a, 0), Direction(b, 0)), diff, 1e-6);
  }
}

TEST(AngularDistanceTest, SymmetryAndTriangleInequality) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto a = testing::random_direction(rng);
    const auto b = testing::random_direction(rng);
    const auto c = testing::random_direction(rng);
    const double ab = angular_distance(a, b);
    EXPECT_EQ(ab, angular_distance(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 180.0);
    EXPECT_LE(angular_distance(a, c), ab + angular_distance(b, c) + 1e-6);
  }
}

TEST(AngularDistanceTest, ZeroOnlyForEqualVectors) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_direction(rng);
    EXPECT_EQ(angular_distance(a, a), 0.0);
    const auto b = offset_direction(a, 1e-3, rng.uniform(0.0, 360.0));
    EXPECT_GT(angular_distance(a, b), 0.0);
  }
}

TEST(AngularDistanceTest, StableForNonUnitInputs) {
  const UnitVector3 v{1.0 + 1e-15, 0.0, 0.0};
  EXPECT_EQ(angular_distance(v, v), 0.0);
  EXPECT_FALSE(std::isnan(angular_distance(UnitVector3{1, 0, 0}, UnitVector3{-1 - 1e-15, 0, 0})));
}

TEST(CartesianDistanceTest, Examples) {
  const UnitVector3 x{1, 0, 0}, y{0, 1, 0}, mx{-1, 0, 0};
  EXPECT_DOUBLE_EQ(cartesian_distance(x, x), 0.0);
  EXPECT_DOUBLE_EQ(cartesian_distance(x, mx), 2.0);
  EXPECT_NEAR(cartesian_distance(x, y), 1.41421356, 1e-8);
  EXPECT_DOUBLE_EQ(cartesian_distance(x, y), cartesian_distance(y, x));
}

TEST(SphericalMeanTest, Examples) {
  const std::vector<Direction> one{Direction(10, 0)};
  const auto m1 = spherical_mean(one);
  EXPECT_NEAR(m1.azimuth(), 10.0, 1e-9);
  EXPECT_NEAR(m1.elevation(), 0.0, 1e-9);

  const std::vector<Direction> two{Direction(10, 0), Direction(30, 0)};
  const auto m2 = spherical_mean(two);
  EXPECT_NEAR(m2.azimuth(), 20.0, 1e-9);
  EXPECT_NEAR(m2.elevation(), 0.0, 1e-9);

  const std::vector<Direction> opposite{Direction(0, 0), Direction(180, 0)};
  EXPECT_THROW(spherical_mean(opposite), DegenerateMean);
  EXPECT_THROW(spherical_mean(std::vector<Direction>{}), DegenerateMean);
}

TEST(OffsetDirectionTest, ExactMagnitude) {
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const auto a = testing::random_direction(rng);
    const double angle = rng.uniform(0.0, 180.0);
    const auto b = offset_direction(a, angle, rng.uniform(0.0, 360.0));
    EXPECT_NEAR(angular_distance(a, b), angle, 1e-6);
  }
  // Poles have no azimuth; the offset still has the requested size.
  EXPECT_NEAR(angular_distance(Direction(0, 90), offset_direction(Direction(0, 90), 5.0, 45.0)), 5.0, 1e-9);
}

}  // namespace
}  // namespace seld
