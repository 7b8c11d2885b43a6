#include <doctest.h>

#include "oracles.hpp"
#include "s2plume/enhance.hpp"
#include "s2plume/stats.hpp"

using namespace s2plume;

namespace {

Field row(std::initializer_list<float> values) {
  Field f(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (float v : values) f(0, i++) = v;
  return f;
}

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io;
}

}  // namespace

TEST_CASE("scale factor of identical bands is 1") {
  Rng rng(3);
  const Field f = oracle::random_field(8, 8, 1.0, 10.0, rng);
  CHECK(fit_scale_c(f, f).c == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fit_scale_c(f, f).n_pixels == 64);
}

TEST_CASE("scale factor matches the grid-scan minimizer") {
  // r11 = [1, 2], r12 = [1, 1]: c = (1 + 2) / (1 + 1) = 1.5
  const double scanned = oracle::grid_scan_scale({1, 1}, {1, 2}, 0.0, 4.0, 1e-6);
  CHECK(scanned == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(fit_scale_c(row({1, 1}), row({1, 2})).c == doctest::Approx(scanned).epsilon(1e-6));
}

TEST_CASE("scale fit errors") {
  CHECK(error_code([] { fit_scale_c(row({0, 0}), row({1, 2})); }) == Errc::degenerate_fit);
  CHECK(error_code([] { fit_scale_c(row({1, 1}), row({1, 2, 3})); }) == Errc::shape_mismatch);
  Mask one(1, 2);
  one << 1, 0;
  CHECK(error_code([&] { fit_scale_c(row({1, 1}), row({1, 2}), &one); }) == Errc::too_few_pixels);
}

TEST_CASE("scale fit respects the support mask") {
  Mask m(1, 3);
  m << 1, 1, 0;
  CHECK(fit_scale_c(row({1, 1, 1}), row({1, 2, 100}), &m).c == doctest::Approx(1.5));
}

TEST_CASE("scale fit is a minimum under random perturbations") {
  Rng rng(11);
  const Field a = oracle::random_field(16, 16, 1.0, 5.0, rng);
  const Field b = oracle::random_field(16, 16, 1.0, 5.0, rng);
  const double c = fit_scale_c(a, b).c;
  auto cost = [&](double k) { return ((k * a.cast<double>() - b.cast<double>()).square()).sum(); };
  const double best = cost(c);
  for (int i = 0; i < 1000; ++i) {
    const double k = c + (rng.uniform() - 0.5) * 0.2;
    CHECK(best <= cost(k) + 1e-9);
  }
}

TEST_CASE("varon ratio") {
  SUBCASE("identity") {
    Rng rng(5);
    const Field f = oracle::random_field(6, 6, 1.0, 9.0, rng);
    const RatioResult v = varon_ratio(f, f, {1.0, 36});
    CHECK((v.values == 0.0f).all());
    CHECK(v.floored == 0);
  }
  SUBCASE("two pixel case") {
    const RatioResult v = varon_ratio(row({1, 1}), row({1, 2}), {1.5, 2});
    // (1.5*1 - 1)/1 and (1.5*1 - 2)/2, evaluated independently
    const double expected[2] = {(1.5 * 1.0 - 1.0) / 1.0, (1.5 * 1.0 - 2.0) / 2.0};
    CHECK(v.values(0, 0) == doctest::Approx(expected[0]));
    CHECK(v.values(0, 1) == doctest::Approx(expected[1]));
    CHECK(expected[0] == 0.5);
    CHECK(expected[1] == -0.25);
  }
  SUBCASE("floored reference pixels are zero and counted") {
    const RatioResult v = varon_ratio(row({1, 1, 1}), row({0, 1e-7f, 2}), {1.0, 3});
    CHECK(v.floored == 2);
    CHECK(v.values(0, 0) == 0.0f);
    CHECK(v.values(0, 1) == 0.0f);
    CHECK(v.values(0, 2) == doctest::Approx(-0.5));
  }
}

TEST_CASE("proportional scene gives V == 0") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Field r11 = oracle::random_field(12, 12, 10.0, 200.0, rng);
    const double k = 0.3 + rng.uniform();
    const Field r12 = (r11.cast<double>() * k).cast<float>();
    const RatioResult v = varon_ratio(r12, r11, fit_scale_c(r12, r11));
    CHECK(v.values.abs().maxCoeff() < 1e-6);
  }
}

namespace {

Scene linear_scene(int w, int h, const std::vector<double>& beta, double intercept, Rng& rng,
                   const std::vector<BandId>& ids) {
  Scene s;
  s.width = w;
  s.height = h;
  Raster<double> b12 = Raster<double>::Constant(h, w, intercept);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    s.bands[ids[i]] = oracle::random_field(w, h, 10.0, 100.0, rng);
    b12 += beta[i] * s.bands[ids[i]].cast<double>();
  }
  s.bands["B12"] = b12.cast<float>();
  return s;
}

}  // namespace

TEST_CASE("background regression recovers an exact linear relation") {
  Scene s;
  s.width = 2;
  s.height = 1;
  s.bands["B11"] = row({1, 2});
  s.bands["B12"] = row({5, 7});  // 2 * B11 + 3
  const RegressionModel m = fit_background_regression(s, nullptr, {"B11"});
  CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m.residual_rms == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("background regression agrees with the normal-equation oracle") {
  Rng rng(23);
  Scene s;
  s.width = 10;
  s.height = 5;
  std::vector<std::vector<double>> cols;
  for (const char* id : {"B11", "B08", "B04"}) {
    s.bands[id] = oracle::random_field(10, 5, 10.0, 100.0, rng);
    cols.push_back(to_vector(s.bands[id]));
  }
  s.bands["B12"] = oracle::random_field(10, 5, 10.0, 100.0, rng);
  const RegressionModel m = fit_background_regression(s, nullptr, {"B11", "B08", "B04"});
  const Eigen::VectorXd ref = oracle::normal_equations(cols, to_vector(s.bands["B12"]));
  for (int k = 0; k < 3; ++k) CHECK(std::abs(m.coefficients[k] - ref(k)) <= 1e-6 * std::abs(ref(k)));
  CHECK(std::abs(m.intercept - ref(3)) <= 1e-6 * std::abs(ref(3)));
  CHECK(m.residual_rms > 0.0);
}

TEST_CASE("background regression errors") {
  Rng rng(29);
  const Scene s = linear_scene(5, 5, {0.5}, 2.0, rng, {"B11"});
  CHECK(error_code([&] { fit_background_regression(s, nullptr, {"B11", "B11"}); }) == Errc::rank_deficient);
  CHECK(error_code([&] { fit_background_regression(s, nullptr, {"B08"}); }) == Errc::missing_band);
  CHECK(error_code([&] { fit_background_regression(s, nullptr, {"B12"}); }) == Errc::invalid_argument);
  Mask one = Mask::Zero(5, 5);
  one(0, 0) = 1;
  CHECK(error_code([&] { fit_background_regression(s, &one, {"B11"}); }) == Errc::too_few_pixels);
}

TEST_CASE("regression model JSON") {
  RegressionModel m{{"B11", "B8A"}, {0.5, -0.25}, 3.0, 0.125};
  const nlohmann::json j = m;
  CHECK(j.dump() == R"({"coefficients":[0.5,-0.25],"intercept":3.0,"predictors":["B11","B8A"],"residual_rms":0.125})");
  const auto back = j.get<RegressionModel>();
  CHECK(back.coefficients == m.coefficients);
  CHECK(back.predictors == m.predictors);
}

TEST_CASE("predict_r12") {
  Scene s;
  s.width = 2;
  s.height = 1;
  s.bands["B11"] = row({1, 2});
  const Field p = predict_r12({{"B11"}, {2.0}, 3.0, 0.0}, s);
  CHECK(p(0, 0) == 5.0f);
  CHECK(p(0, 1) == 7.0f);
  const Field c = predict_r12({{"B11"}, {0.0}, 4.0, 0.0}, s);
  CHECK((c == 4.0f).all());
  CHECK(error_code([&] { predict_r12({{"B08"}, {1.0}, 0.0, 0.0}, s); }) == Errc::missing_band);
}

TEST_CASE("sanchez ratio") {
  SUBCASE("perfect background model") {
    Rng rng(31);
    const Field f = oracle::random_field(7, 7, 5.0, 50.0, rng);
    const RatioResult s = sanchez_ratio(f, f);
    CHECK(s.scale.c == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((s.values == 0.0f).all());
  }
  SUBCASE("single suppressed pixel") {
    Rng rng(37);
    Scene scene = linear_scene(9, 9, {0.7}, 4.0, rng, {"B11"});
    Field& b12 = scene.band("B12");
    b12(4, 4) *= 0.9f;
    Mask background = Mask::Ones(9, 9);
    background(4, 4) = 0;
    const RegressionModel m = fit_background_regression(scene, &background, {"B11"});
    const Field hat = predict_r12(m, scene);
    const RatioResult s = sanchez_ratio(b12, hat, &background);
    const double direct = (s.scale.c * b12(4, 4) - hat(4, 4)) / hat(4, 4);
    CHECK(s.values(4, 4) == doctest::Approx(direct).epsilon(1e-6));
    CHECK(s.values(4, 4) < -0.05);
    Field rest = s.values;
    rest(4, 4) = 0.0f;
    CHECK(rest.abs().maxCoeff() < 1e-5);
  }
  SUBCASE("zero prediction is degenerate") {
    CHECK(error_code([] { sanchez_ratio(row({1, 2}), row({0, 0})); }) == Errc::degenerate_fit);
  }
}

TEST_CASE("exact linear background gives S == 0") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Scene s = linear_scene(16, 16, {0.4 + rng.uniform(), 0.2 * rng.uniform()}, 10.0 * rng.uniform(), rng,
                                 {"B11", "B8A"});
    const RegressionModel m = fit_background_regression(s, nullptr, {"B11", "B8A"});
    const RatioResult r = sanchez_ratio(s.band("B12"), predict_r12(m, s));
    CHECK(r.values.abs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("stack_vsv") {
  const FeatureStack st = stack_vsv(Field::Constant(2, 2, 1.0f), Field::Constant(2, 2, 2.0f));
  CHECK((st.channels[0] == 1.0f).all());
  CHECK((st.channels[1] == 2.0f).all());
  CHECK((st.channels[2] == 1.0f).all());
  CHECK_FALSE(st.normalization.has_value());
  CHECK(error_code([] { stack_vsv(Field::Zero(2, 2), Field::Zero(2, 3)); }) == Errc::shape_mismatch);

  Rng rng(43);
  const FeatureStack r = stack_vsv(oracle::random_field(5, 4, -1, 1, rng), oracle::random_field(5, 4, -1, 1, rng));
  CHECK(bit_equal(r.channels[0], r.channels[2]));
  const FeatureStack z = zscore(r);
  CHECK(bit_equal(z.channels[0], z.channels[2]));
}

TEST_CASE("zscore") {
  SUBCASE("constant channel goes to zero") {
    const FeatureStack z = zscore(stack_vsv(Field::Constant(3, 3, 4.0f), Field::Constant(3, 3, -2.0f)));
    for (const auto& ch : z.channels) CHECK((ch == 0.0f).all());
    CHECK((*z.normalization)[0].std == 0.0);
  }
  SUBCASE("hand computed two pixel channel") {
    const FeatureStack z = zscore(stack_vsv(row({0, 2}), row({0, 2})));
    CHECK(z.channels[0](0, 0) == -1.0f);
    CHECK(z.channels[0](0, 1) == 1.0f);
    CHECK((*z.normalization)[1].mean == 1.0);
    CHECK((*z.normalization)[1].std == 1.0);
  }
  SUBCASE("moments after normalization") {
    Rng rng(47);
    const FeatureStack z =
        zscore(stack_vsv(oracle::random_field(20, 20, -3, 8, rng), oracle::random_field(20, 20, 100, 101, rng)));
    for (const auto& ch : z.channels) {
      // Independent recomputation of the moments.
      const Raster<double> d = ch.cast<double>();
      const double mean = d.sum() / static_cast<double>(d.size());
      const double var = (d - mean).square().sum() / static_cast<double>(d.size());
      CHECK(std::abs(mean) <= 1e-6);
      CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("enhance_scene on a noiseless proportional scene") {
  Rng rng(53);
  Scene s;
  s.width = 12;
  s.height = 12;
  s.bands["B11"] = oracle::random_field(12, 12, 50, 150, rng);
  s.bands["B12"] = (s.bands["B11"].cast<double>() * 0.8).cast<float>();
  const EnhanceResult r = enhance_scene(s, {{"B11"}, 2.5, 97.5, false});
  CHECK(r.stack.varon().abs().maxCoeff() < 1e-6);
  CHECK(r.stack.sanchez().abs().maxCoeff() < 1e-5);
  CHECK(r.varon_scale.c == doctest::Approx(1.25).epsilon(1e-6));
  CHECK(bit_equal(r.stack.channels[0], r.stack.channels[2]));

  Scene missing = s;
  missing.bands.erase("B12");
  CHECK(error_code([&] { enhance_scene(missing); }) == Errc::missing_band);
}
