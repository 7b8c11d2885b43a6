#pragma once

#include <string>
#include <vector>

#include "s2plume/raster.hpp"

namespace s2plume {

// Pixels whose reference radiance is at or below this are set to 0 in a ratio.
inline constexpr double kReferenceFloor = 1e-6;
// Lower bound on the z-score divisor.
inline constexpr double kSigmaFloor = 1e-8;

struct ScaleFactor {
  double c = 1.0;
  std::size_t n_pixels = 0;
};

// Least-squares c minimizing sum (c * absorbing - reference)^2 over the
// support (nonzero mask pixels, or every pixel when support is null).
// Accumulates row-major in double.
ScaleFactor fit_scale_c(const Field& absorbing, const Field& reference,
                        const Mask* support = nullptr);

struct RatioResult {
  Field values;
  ScaleFactor scale;
  std::size_t floored = 0;  // pixels with reference <= kReferenceFloor, set to 0
};

// (c * absorbing - reference) / reference, per pixel.
RatioResult varon_ratio(const Field& absorbing, const Field& reference, ScaleFactor c);

struct RegressionModel {
  std::vector<BandId> predictors;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

void to_json(nlohmann::json& j, const RegressionModel& m);
void from_json(const nlohmann::json& j, RegressionModel& m);

// Ordinary least squares with intercept for B12 on the predictor bands, fit
// over the background pixels (nonzero in the mask; all pixels when null).
RegressionModel fit_background_regression(const Scene& scene, const Mask* background,
                                          const std::vector<BandId>& predictors);

// Expected methane-free B12 radiance under the model.
Field predict_r12(const RegressionModel& model, const Scene& scene);

// Varon form with the predicted B12 as the reference. Re-fits its own scale
// factor over the support.
RatioResult sanchez_ratio(const Field& r12, const Field& r12_hat, const Mask* support = nullptr);

FeatureStack stack_vsv(const Field& v, const Field& s);

// Per-channel (x - mean) / max(std, kSigmaFloor) with population std.
FeatureStack zscore(const FeatureStack& stack);

// Full scene-to-stack pipeline.
struct EnhanceConfig {
  std::vector<BandId> predictors{"B11"};
  double p_lo = 2.5;
  double p_hi = 97.5;
  bool normalize = true;
};

void to_json(nlohmann::json& j, const EnhanceConfig& c);
void from_json(const nlohmann::json& j, EnhanceConfig& c);

struct EnhanceResult {
  FeatureStack stack;
  ScaleFactor varon_scale;
  ScaleFactor sanchez_scale;
  RegressionModel model;
  Mask background;  // pixels used for all fits
  std::size_t floored = 0;
};

// Background pixels are chosen by percentile-trimming a first-pass Varon
// ratio fit over the whole scene; every later fit (c, the regression, c')
// then runs on that support.
EnhanceResult enhance_scene(const Scene& scene, const EnhanceConfig& config = {});

}  // namespace s2plume
