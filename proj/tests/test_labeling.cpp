#include <doctest.h>

#include "oracles.hpp"
#include "s2plume/labeling.hpp"

using namespace s2plume;

TEST_CASE("threshold masks") {
  Field f(1, 3);
  f << -1.0f, 0.0f, 1.0f;
  const Mask below = mask_from_threshold(f, -0.5, Direction::below);
  CHECK(below(0, 0) == 1);
  CHECK(below(0, 1) == 0);
  CHECK(below(0, 2) == 0);
  const Mask above = mask_from_threshold(f, 0.0, Direction::above);
  CHECK(above(0, 0) == 0);
  CHECK(above(0, 1) == 0);
  CHECK(above(0, 2) == 1);
}

TEST_CASE("connectivity") {
  Mask m = Mask::Zero(3, 3);
  m(0, 0) = m(1, 1) = m(2, 2) = 1;
  CHECK(connected_components(m, 4).size() == 3);
  const auto eight = connected_components(m, 8);
  REQUIRE(eight.size() == 1);
  CHECK(eight[0].area_px == 3);
  CHECK(eight[0].centroid_x == doctest::Approx(1.0));
  CHECK(eight[0].x0 == 0);
  CHECK(eight[0].x1 == 2);
  CHECK_THROWS_AS(connected_components(m, 6), Error);
  CHECK(connected_components(Mask::Zero(4, 4)).empty());
}

TEST_CASE("component ids follow raster order") {
  Mask m = Mask::Zero(4, 6);
  m(3, 0) = 1;
  m(0, 4) = m(0, 5) = 1;
  m(1, 1) = 1;
  const auto comps = connected_components(m, 4);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].pixels.front() == Pixel{4, 0});
  CHECK(comps[1].pixels.front() == Pixel{1, 1});
  CHECK(comps[2].pixels.front() == Pixel{0, 3});
  CHECK(comps[0].area_px == 2);
  for (std::size_t i = 0; i < comps.size(); ++i) CHECK(comps[i].id == static_cast<int>(i) + 1);
}

TEST_CASE("contour of a single pixel") {
  Mask m = Mask::Zero(1, 1);
  m(0, 0) = 1;
  const auto contours = extract_contours(m);
  REQUIRE(contours.size() == 1);
  const std::vector<std::pair<int, int>> expected{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}};
  CHECK(contours[0].vertices == expected);
  CHECK(shoelace_area(contours[0]) == doctest::Approx(1.0));
  CHECK(perimeter(contours[0]) == doctest::Approx(4.0));
}

TEST_CASE("contour of a 2x2 block") {
  Mask m = Mask::Zero(4, 4);
  m.block(1, 1, 2, 2).setOnes();
  const auto contours = extract_contours(m);
  REQUIRE(contours.size() == 1);
  const std::vector<std::pair<int, int>> expected{{1, 1}, {3, 1}, {3, 3}, {1, 3}, {1, 1}};
  CHECK(contours[0].vertices == expected);
  CHECK(shoelace_area(contours[0]) == doctest::Approx(4.0));
  CHECK(perimeter(contours[0]) == doctest::Approx(8.0));
}

TEST_CASE("diagonal pixels trace as separate outlines") {
  Mask m = Mask::Zero(2, 2);
  m(0, 0) = m(1, 1) = 1;
  const auto contours = extract_contours(m);
  REQUIRE(contours.size() == 2);
  for (const auto& c : contours) CHECK(shoelace_area(c) == doctest::Approx(1.0));
}

TEST_CASE("L shape keeps only corner vertices") {
  Mask m = Mask::Zero(3, 3);
  m(0, 0) = m(1, 0) = m(2, 0) = m(2, 1) = 1;
  const auto contours = extract_contours(m);
  REQUIRE(contours.size() == 1);
  CHECK(contours[0].vertices.size() == 7);
  CHECK(shoelace_area(contours[0]) == doctest::Approx(4.0));
  CHECK(perimeter(contours[0]) == doctest::Approx(10.0));
}

TEST_CASE("random hole-free blobs: outline area equals pixel count") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Mask blob = oracle::random_blob(24, 20, 10 + static_cast<int>(rng.below(150)), rng);
    const auto contours = extract_contours(blob);
    REQUIRE(contours.size() == 1);
    const auto& v = contours[0].vertices;
    CHECK(v.front() == v.back());
    CHECK(shoelace_area(contours[0]) == doctest::Approx(blob.cast<int>().sum()));
    CHECK(perimeter(contours[0]) == doctest::Approx(oracle::boundary_edges(blob)));
  }
}

TEST_CASE("source assignment") {
  Mask m = Mask::Zero(10, 10);
  m(1, 1) = 1;
  m(8, 8) = 1;
  m(5, 5) = 1;
  const auto comps = connected_components(m, 8);
  SUBCASE("nearest vent") {
    const Mask out = assign_sources(comps, {{"a", 0, 0}, {"b", 9, 9}}, 10, 10);
    CHECK(out(1, 1) == 1);
    CHECK(out(8, 8) == 2);
    CHECK(out(0, 0) == 0);
  }
  SUBCASE("tie goes to the lower index") {
    const Mask out = assign_sources(comps, {{"a", 4, 5}, {"b", 6, 5}}, 10, 10);
    CHECK(out(5, 5) == 1);
    const Mask swapped = assign_sources(comps, {{"b", 6, 5}, {"a", 4, 5}}, 10, 10);
    CHECK(swapped(5, 5) == 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(assign_sources(comps, {}, 10, 10), Error);
    CHECK_THROWS_AS(assign_sources(comps, {{"a", 0, 0}}, 5, 5), Error);
  }
}

TEST_CASE("source assignment agrees with brute force") {
  Rng rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const Mask m = oracle::random_mask(16, 16, 0.15, rng);
    const auto comps = connected_components(m, 8);
    std::vector<Vent> vents;
    const int nv = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < nv; ++i) vents.push_back({"v", 16 * rng.uniform(), 16 * rng.uniform()});
    const Mask out = assign_sources(comps, vents, 16, 16);
    for (const auto& c : comps) {
      double sx = 0, sy = 0;
      for (const auto& p : c.pixels) {
        sx += p.x;
        sy += p.y;
      }
      sx /= static_cast<double>(c.pixels.size());
      sy /= static_cast<double>(c.pixels.size());
      int best = 0;
      for (int i = 1; i < nv; ++i) {
        auto d = [&](int k) {
          return std::hypot(sx - vents[static_cast<std::size_t>(k)].x, sy - vents[static_cast<std::size_t>(k)].y);
        };
        if (d(i) < d(best)) best = i;
      }
      for (const auto& p : c.pixels) CHECK(out(p.y, p.x) == best + 1);
    }
    CHECK(((out != 0) == (m != 0)).all());
  }
}

TEST_CASE("geojson export and vent JSON") {
  Mask m = Mask::Zero(3, 3);
  m(1, 1) = 1;
  const nlohmann::json g = contours_to_geojson(extract_contours(m));
  CHECK(g["type"] == "FeatureCollection");
  REQUIRE(g["features"].size() == 1);
  const auto& ring = g["features"][0]["geometry"]["coordinates"][0];
  CHECK(ring.size() == 5);
  CHECK(ring[0] == nlohmann::json({1, 1}));

  const Vent v = nlohmann::json::parse(R"({"name": "crater", "xy": [3.5, 7]})").get<Vent>();
  CHECK(v.name == "crater");
  CHECK(v.x == 3.5);
  CHECK(v.y == 7.0);
  CHECK(nlohmann::json(v).get<Vent>().x == 3.5);
}

TEST_CASE("per-vent thresholds") {
  Field f = Field::Constant(1, 10, -0.5f);
  const std::vector<Vent> vents{{"west", 0, 0, -0.4}, {"east", 9, 0, std::nullopt}};
  const Mask m = mask_from_vent_thresholds(f, vents, -0.6, Direction::below);
  for (int x = 0; x < 10; ++x) CHECK(m(0, x) == (x <= 4 ? 1 : 0));
  CHECK(nearest_vent(4.5, 0, vents) == 0);
  CHECK(bit_equal(mask_from_vent_thresholds(f, {{"only", 3, 0, std::nullopt}}, -0.45, Direction::below),
                  mask_from_threshold(f, -0.45, Direction::below)));
  CHECK_THROWS_AS(mask_from_vent_thresholds(f, {}, 0.0, Direction::below), Error);
  const Vent back = nlohmann::json(vents[0]).get<Vent>();
  CHECK(back.threshold == -0.4);
  CHECK_FALSE(nlohmann::json(vents[1]).contains("threshold"));
}
