#include "s2plume/enhance.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "s2plume/stats.hpp"
#include "s2plume/synth.hpp"

namespace s2plume {

ScaleFactor fit_scale_c(const Field& absorbing, const Field& reference, const Mask* support) {
  require_same_shape(absorbing, reference, "fit_scale_c");
  if (support) require_same_shape(absorbing, *support, "fit_scale_c support");

  double cross = 0.0;
  double energy = 0.0;
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < absorbing.rows(); ++r) {
    for (Eigen::Index col = 0; col < absorbing.cols(); ++col) {
      if (support && (*support)(r, col) == 0) continue;
      const double a = absorbing(r, col);
      cross += a * static_cast<double>(reference(r, col));
      energy += a * a;
      ++n;
    }
  }
  if (n < 2) throw Error(Errc::too_few_pixels, "scale fit needs at least 2 pixels");
  if (!(energy > 0.0)) throw Error(Errc::degenerate_fit, "absorbing band is zero on the support");
  const double c = cross / energy;
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(Errc::degenerate_fit, "scale factor is not positive (reference zero on the support?)");
  }
  return {c, n};
}

RatioResult varon_ratio(const Field& absorbing, const Field& reference, ScaleFactor c) {
  require_same_shape(absorbing, reference, "varon_ratio");
  RatioResult out{Field(absorbing.rows(), absorbing.cols()), c, 0};
  for (Eigen::Index r = 0; r < absorbing.rows(); ++r) {
    for (Eigen::Index col = 0; col < absorbing.cols(); ++col) {
      const double ref = reference(r, col);
      if (ref <= kReferenceFloor) {
        out.values(r, col) = 0.0f;
        ++out.floored;
        continue;
      }
      out.values(r, col) =
          static_cast<float>((c.c * static_cast<double>(absorbing(r, col)) - ref) / ref);
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const RegressionModel& m) {
  j = {{"predictors", m.predictors},
       {"coefficients", m.coefficients},
       {"intercept", m.intercept},
       {"residual_rms", m.residual_rms}};
}

void from_json(const nlohmann::json& j, RegressionModel& m) {
  j.at("predictors").get_to(m.predictors);
  j.at("coefficients").get_to(m.coefficients);
  m.intercept = j.at("intercept").get<double>();
  m.residual_rms = j.value("residual_rms", 0.0);
  if (m.coefficients.size() != m.predictors.size()) {
    throw Error(Errc::invalid_argument, "regression model needs one coefficient per predictor");
  }
}

RegressionModel fit_background_regression(const Scene& scene, const Mask* background,
                                          const std::vector<BandId>& predictors) {
  const Field& target = scene.band("B12");
  if (predictors.empty()) throw Error(Errc::invalid_argument, "no predictor bands");
  std::vector<const Field*> bands;
  for (const auto& id : predictors) {
    if (id == "B12") throw Error(Errc::invalid_argument, "B12 cannot predict itself");
    bands.push_back(&scene.band(id));
  }
  if (background) require_same_shape(target, *background, "background mask");

  const auto p = static_cast<Eigen::Index>(predictors.size());
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  for (Eigen::Index r = 0; r < target.rows(); ++r)
    for (Eigen::Index c = 0; c < target.cols(); ++c)
      if (!background || (*background)(r, c) != 0) rows.emplace_back(r, c);
  if (static_cast<Eigen::Index>(rows.size()) < p + 1) {
    throw Error(Errc::too_few_pixels, "regression needs at least " + std::to_string(p + 1) +
                                          " background pixels");
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), p + 1);
  Eigen::VectorXd y(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const auto [r, c] = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < p; ++k) design(i, k) = (*bands[static_cast<std::size_t>(k)])(r, c);
    design(i, p) = 1.0;
    y(i) = target(r, c);
  }

  // Column-scaled QR keeps the rank test meaningful across radiance scales.
  const Eigen::VectorXd scale = design.colwise().norm().cwiseMax(1e-300).transpose();
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) {
    throw Error(Errc::rank_deficient, "predictors are collinear on the background pixels");
  }
  const Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);

  RegressionModel model;
  model.predictors = predictors;
  model.coefficients.assign(beta.data(), beta.data() + p);
  model.intercept = beta(p);
  const Eigen::VectorXd resid = design * beta - y;
  model.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
  return model;
}

Field predict_r12(const RegressionModel& model, const Scene& scene) {
  if (model.coefficients.size() != model.predictors.size()) {
    throw Error(Errc::invalid_argument, "regression model needs one coefficient per predictor");
  }
  std::vector<const Field*> bands;
  for (const auto& id : model.predictors) bands.push_back(&scene.band(id));

  Field out(scene.height, scene.width);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      double v = model.intercept;
      for (std::size_t k = 0; k < bands.size(); ++k) v += model.coefficients[k] * (*bands[k])(r, c);
      out(r, c) = static_cast<float>(v);
    }
  }
  return out;
}

RatioResult sanchez_ratio(const Field& r12, const Field& r12_hat, const Mask* support) {
  return varon_ratio(r12, r12_hat, fit_scale_c(r12, r12_hat, support));
}

FeatureStack stack_vsv(const Field& v, const Field& s) {
  require_same_shape(v, s, "stack_vsv");
  return FeatureStack{{v, s, v}, std::nullopt};
}

FeatureStack zscore(const FeatureStack& stack) {
  FeatureStack out;
  std::array<ChannelStats, 3> stats;
  for (std::size_t i = 0; i < 3; ++i) {
    const Field& ch = stack.channels[i];
    if (ch.size() < 2) throw Error(Errc::too_few_pixels, "z-score needs at least 2 pixels");
    const auto [mean, std] = mean_std(ch);
    const double divisor = std::max(std, kSigmaFloor);
    out.channels[i] = ((ch.cast<double>() - mean) / divisor).cast<float>();
    stats[i] = {mean, std};
  }
  out.normalization = stats;
  return out;
}

void to_json(nlohmann::json& j, const EnhanceConfig& c) {
  j = {{"predictors", c.predictors}, {"p_lo", c.p_lo}, {"p_hi", c.p_hi}, {"normalize", c.normalize}};
}

void from_json(const nlohmann::json& j, EnhanceConfig& c) {
  c = EnhanceConfig{};
  if (j.contains("predictors")) j.at("predictors").get_to(c.predictors);
  c.p_lo = j.value("p_lo", c.p_lo);
  c.p_hi = j.value("p_hi", c.p_hi);
  c.normalize = j.value("normalize", c.normalize);
}

EnhanceResult enhance_scene(const Scene& scene, const EnhanceConfig& config) {
  validate(scene);
  const Field& r11 = scene.band("B11");
  const Field& r12 = scene.band("B12");

  EnhanceResult out;
  const RatioResult first_pass = varon_ratio(r12, r11, fit_scale_c(r12, r11));
  out.background = background_mask_percentile(first_pass.values, config.p_lo, config.p_hi);

  const RatioResult v = varon_ratio(r12, r11, fit_scale_c(r12, r11, &out.background));
  out.model = fit_background_regression(scene, &out.background, config.predictors);
  const Field r12_hat = predict_r12(out.model, scene);
  const RatioResult s = sanchez_ratio(r12, r12_hat, &out.background);

  out.varon_scale = v.scale;
  out.sanchez_scale = s.scale;
  out.floored = v.floored + s.floored;
  out.stack = stack_vsv(v.values, s.values);
  if (config.normalize) out.stack = zscore(out.stack);
  return out;
}

}  // namespace s2plume
