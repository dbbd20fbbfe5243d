// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "disoul/geometry.hpp"
#include "disoul/random.hpp"

using namespace disoul;
using Catch::Approx;

namespace {

bool contains_point(const std::vector<Position>& pts, Position p, double tol = 1e-9) {
  return std::any_of(pts.begin(), pts.end(), [&](Position q) {
    return std::fabs(q.x - p.x) <= tol && std::fabs(q.y - p.y) <= tol;
  });
}

bool contains_angle(const std::vector<double>& angles, double a, double tol = 1e-9) {
  return std::any_of(angles.begin(), angles.end(), [&](double b) {
    return angular_distance(a, b) <= tol;
  });
}

}  // namespace

TEST_CASE("toa_of matches direct arithmetic", "[geometry]") {
  CHECK(toa_of({12.0, -7.0}, {12.0, -7.0}) == 0.0);
  // ||[90, 90]|| / c and 300 / c, computed independently
  CHECK(toa_of({45.0, 45.0}, {-45.0, -45.0}) == Approx(4.2455778061494315e-07).epsilon(1e-12));
  CHECK(toa_of({300.0, 0.0}, {0.0, 0.0}) == Approx(1.000692285594456e-06).epsilon(1e-12));
}

TEST_CASE("aoa_of covers the four cardinal bearings", "[geometry]") {
  const Position c{1.0, 2.0};
  CHECK(aoa_of({5.0, 2.0}, c) == Approx(0.0).margin(1e-15));
  CHECK(aoa_of({1.0, 9.0}, c) == Approx(kPi / 2.0));
  CHECK(aoa_of({-4.0, 2.0}, c) == Approx(kPi));
  CHECK(aoa_of({1.0, -3.0}, c) == Approx(-kPi / 2.0));
  CHECK_THROWS_AS(aoa_of(c, c), std::invalid_argument);
}

TEST_CASE("aoa_of range and translation invariance", "[geometry]") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Position p{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
    const Position c{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
    if (distance(p, c) < 1e-6) continue;
    const double theta = aoa_of(p, c);
    CHECK(theta >= -kPi / 2.0);
    CHECK(theta < 3.0 * kPi / 2.0);
    const Position shift{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
    CHECK(aoa_of(p + shift, c + shift) == Approx(theta).margin(1e-12));
    CHECK(toa_of(p + shift, c + shift) == Approx(toa_of(p, c)).epsilon(1e-12));
  }
}

TEST_CASE("make_location_grid counts and anchoring", "[geometry]") {
  const LocationGrid small = make_location_grid(Rect::centered({0, 0}, 10, 10), 5.0);
  CHECK(small.points.size() == 9);

  const LocationGrid standard = make_location_grid(Rect::centered({0, 0}, 100, 100), 5.0);
  CHECK(standard.points.size() == 441);
  CHECK(contains_point(standard.points, {0.0, 0.0}));
  CHECK(contains_point(standard.points, {45.0, -45.0}));
  for (const Position p : standard.points) {
    CHECK(std::fabs(p.x) <= 50.0 + 1e-9);
    CHECK(std::fabs(p.y) <= 50.0 + 1e-9);
  }

  const LocationGrid degenerate = make_location_grid(Rect::centered({3, 4}, 0, 0), 1.0);
  REQUIRE(degenerate.points.size() == 1);
  CHECK(degenerate.points[0].x == Approx(3.0));
  CHECK(degenerate.points[0].y == Approx(4.0));

  CHECK_THROWS_AS(make_location_grid(Rect::centered({0, 0}, 10, 10), 0.0),
                  std::invalid_argument);
}

TEST_CASE("make_angle_grid counts", "[geometry]") {
  const AngleGrid quarters = make_angle_grid(kPi / 2.0);
  REQUIRE(quarters.angles.size() == 4);
  CHECK(quarters.angles[1] == Approx(kPi / 2.0));
  CHECK(quarters.angles[3] == Approx(3.0 * kPi / 2.0));

  // the reference resolution of 5.71 degrees gives 63 angles
  CHECK(make_angle_grid(5.71 * kPi / 180.0).angles.size() == 63);
  CHECK(make_angle_grid(2.0 * kPi / 3.0).angles.size() == 3);
  CHECK_THROWS_AS(make_angle_grid(0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_angle_grid(kTwoPi), std::invalid_argument);
}

TEST_CASE("trim_by_toa keeps disk members and expands when empty", "[geometry]") {
  const LocationGrid grid = make_location_grid(Rect::centered({0, 0}, 100, 100), 5.0);
  const std::vector<Position> stations{{0.0, 0.0}};
  const double inf = std::numeric_limits<double>::infinity();

  const LocationGrid unlimited = trim_by_toa(grid, {{inf}, 1e-9}, stations);
  CHECK(unlimited.points.size() == grid.points.size());

  const LocationGrid disk = trim_by_toa(grid, {{10.0 / kSpeedOfLight}, 1e-9}, stations);
  for (const Position p : disk.points) CHECK(norm(p) <= 10.0 + 1e-9);
  std::size_t expected = 0;
  for (const Position p : grid.points)
    if (norm(p) <= 10.0) ++expected;
  CHECK(disk.points.size() == expected);

  // zero bounds around an off-grid station force expansion rounds
  const std::vector<Position> off{{3.0, 4.0}};
  const double step = 1.0 / 30e6;
  const LocationGrid expanded = trim_by_toa(grid, {{0.0}, step}, off);
  REQUIRE_FALSE(expanded.points.empty());
  // brute-force oracle: the first k with a grid point inside c*k*step
  double nearest = std::numeric_limits<double>::infinity();
  for (const Position p : grid.points) nearest = std::min(nearest, distance(p, off[0]));
  const double k = std::ceil(nearest / (kSpeedOfLight * step));
  for (const Position p : expanded.points)
    CHECK(distance(p, off[0]) <= kSpeedOfLight * k * step + 1e-9);
  CHECK(contains_point(expanded.points, {5.0, 5.0}));
}

TEST_CASE("trim_by_toa is monotone in the bounds", "[geometry]") {
  const LocationGrid grid = make_location_grid(Rect::centered({0, 0}, 60, 60), 3.0);
  const std::vector<Position> stations{{10.0, 5.0}, {-20.0, 0.0}};
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double t1 = rng.uniform(0.0, 40.0) / kSpeedOfLight;
    const double t2 = rng.uniform(0.0, 40.0) / kSpeedOfLight;
    const LocationGrid tight = filter_by_toa(grid, std::vector<double>{t1, t2}, stations);
    const LocationGrid loose =
        filter_by_toa(grid, std::vector<double>{t1 * 1.5, t2 * 1.5}, stations);
    for (const Position p : tight.points) CHECK(contains_point(loose.points, p));
    CHECK(tight.points.size() <= loose.points.size());
  }
}

TEST_CASE("refine_location_grid forms merged 5x5 lattices", "[geometry]") {
  const std::vector<Position> single{{2.0, -1.0}};
  const auto lattice = refine_location_grid(single, 1.0);
  REQUIRE(lattice.size() == 25);
  CHECK(contains_point(lattice, {2.0, -1.0}));
  CHECK(contains_point(lattice, {4.0, 1.0}));
  CHECK(contains_point(lattice, {0.0, -3.0}));

  // two estimates one meter apart share two lattice columns
  const std::vector<Position> pair{{0.0, 0.0}, {1.0, 0.0}};
  const auto merged = refine_location_grid(pair, 1.0);
  std::size_t expected = 0;
  for (int j = -2; j <= 2; ++j)
    for (int i = -2; i <= 3; ++i) ++expected;  // x in {-2..3}, y in {-2..2}
  CHECK(merged.size() == expected);

  CHECK(refine_location_grid(std::vector<Position>{}, 1.0).empty());
}

TEST_CASE("refine_location_grid contains every input point", "[geometry]") {
  Rng rng(11);
  std::vector<Position> pts;
  for (int i = 0; i < 20; ++i)
    pts.push_back({rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)});
  const auto refined = refine_location_grid(pts, 0.625);
  for (const Position p : pts) CHECK(contains_point(refined, p));
}

TEST_CASE("refine_angle_grid neighbourhoods and rounding", "[geometry]") {
  const std::vector<double> one{1.0};
  const auto five = refine_angle_grid(one, 0.1, {}, {0.0, 0.0});
  REQUIRE(five.size() == 5);
  for (int i = -2; i <= 2; ++i) CHECK(contains_angle(five, 1.0 + 0.1 * i));

  // a location due north of the station rounds to an exact multiple
  const std::vector<Position> north{{0.0, 10.0}};
  const auto rounded = refine_angle_grid({}, kPi / 4.0, north, {0.0, 0.0});
  REQUIRE(rounded.size() == 1);
  CHECK(rounded[0] == Approx(kPi / 2.0));

  // wrap-around below zero
  const std::vector<double> tiny{0.01};
  const auto wrapped = refine_angle_grid(tiny, 0.1, {}, {0.0, 0.0});
  REQUIRE(wrapped.size() == 5);
  CHECK(contains_angle(wrapped, kTwoPi - 0.19));
  CHECK(contains_angle(wrapped, kTwoPi - 0.09));
  CHECK(contains_angle(wrapped, 0.01));
}
