#include "s2plume/synth.hpp"

#include <algorithm>
#include <cmath>

#include "s2plume/stats.hpp"

namespace s2plume {

void validate(const NoiseSpec& spec) {
  if (!(spec.gaussian_sigma >= 0.0) || !std::isfinite(spec.gaussian_sigma)) {
    throw Error(Errc::invalid_argument, "gaussian_sigma must be finite and >= 0");
  }
  if (spec.artifact_count < 0) throw Error(Errc::invalid_argument, "artifact_count must be >= 0");
  if (!(spec.artifact_radius_px > 0.0) || !std::isfinite(spec.artifact_radius_px)) {
    throw Error(Errc::invalid_argument, "artifact_radius_px must be finite and > 0");
  }
  if (!std::isfinite(spec.artifact_amplitude)) {
    throw Error(Errc::invalid_argument, "artifact_amplitude must be finite");
  }
}

void validate(const PlumeSpec& spec) {
  if (!std::isfinite(spec.center_x) || !std::isfinite(spec.center_y)) {
    throw Error(Errc::invalid_argument, "plume center must be finite");
  }
  if (!(spec.sigma_px > 0.0) || !std::isfinite(spec.sigma_px)) {
    throw Error(Errc::invalid_argument, "sigma_px must be > 0");
  }
  // peak_enhancement == 0 is accepted as the null plume.
  if (!(spec.peak_enhancement >= 0.0) || !std::isfinite(spec.peak_enhancement)) {
    throw Error(Errc::invalid_argument, "peak_enhancement must be >= 0");
  }
  if (!(spec.absorption_kappa > 0.0) || !std::isfinite(spec.absorption_kappa)) {
    throw Error(Errc::invalid_argument, "absorption_kappa must be > 0");
  }
  if (!(spec.label_threshold > 0.0 && spec.label_threshold < 1.0)) {
    throw Error(Errc::invalid_argument, "label_threshold must be in (0, 1)");
  }
  if (spec.source_id < 1 || spec.source_id > 255) {
    throw Error(Errc::invalid_argument, "source_id must be in 1..255");
  }
}

void validate(const SceneConfig& config) {
  if (config.width <= 0 || config.height <= 0) {
    throw Error(Errc::invalid_argument, "scene dimensions must be positive");
  }
  if (!(config.pixel_size_m > 0.0)) throw Error(Errc::invalid_argument, "pixel_size_m must be > 0");
  validate(config.noise);
  for (const auto& p : config.plumes) validate(p);
  bool has_b11 = false;
  for (const auto& t : config.textures) {
    if (t.id == "B12") throw Error(Errc::invalid_argument, "B12 is derived, not textured");
    if (!(t.correlation_px >= 0.0)) throw Error(Errc::invalid_argument, "correlation_px must be >= 0");
    has_b11 = has_b11 || t.id == "B11";
  }
  if (!has_b11) throw Error(Errc::invalid_argument, "config needs a B11 texture");
  const auto& rel = config.relation;
  if (rel.predictors.size() != rel.coefficients.size()) {
    throw Error(Errc::invalid_argument, "relation needs one coefficient per predictor");
  }
  for (const auto& id : rel.predictors) {
    const bool found = std::any_of(config.textures.begin(), config.textures.end(),
                                   [&](const BandTexture& t) { return t.id == id; });
    if (!found) throw Error(Errc::missing_band, "relation predictor " + id + " has no texture");
  }
  const bool artifact_band_ok =
      config.artifact_band == "B12" ||
      std::any_of(config.textures.begin(), config.textures.end(),
                  [&](const BandTexture& t) { return t.id == config.artifact_band; });
  if (!artifact_band_ok) throw Error(Errc::missing_band, "unknown artifact band " + config.artifact_band);
}

void to_json(nlohmann::json& j, const NoiseSpec& s) {
  j = {{"gaussian_sigma", s.gaussian_sigma},
       {"artifact_count", s.artifact_count},
       {"artifact_radius_px", s.artifact_radius_px},
       {"artifact_amplitude", s.artifact_amplitude},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, NoiseSpec& s) {
  s = NoiseSpec{};
  s.gaussian_sigma = j.value("gaussian_sigma", s.gaussian_sigma);
  s.artifact_count = j.value("artifact_count", s.artifact_count);
  s.artifact_radius_px = j.value("artifact_radius_px", s.artifact_radius_px);
  s.artifact_amplitude = j.value("artifact_amplitude", s.artifact_amplitude);
  s.seed = j.value("seed", s.seed);
}

void to_json(nlohmann::json& j, const PlumeSpec& s) {
  j = {{"center_xy", {s.center_x, s.center_y}},
       {"sigma_px", s.sigma_px},
       {"peak_enhancement", s.peak_enhancement},
       {"absorption_kappa", s.absorption_kappa},
       {"label_threshold", s.label_threshold},
       {"source_id", s.source_id}};
}

void from_json(const nlohmann::json& j, PlumeSpec& s) {
  s = PlumeSpec{};
  const auto& xy = j.at("center_xy");
  if (!xy.is_array() || xy.size() != 2) throw Error(Errc::invalid_argument, "center_xy needs 2 values");
  s.center_x = xy[0].get<double>();
  s.center_y = xy[1].get<double>();
  s.sigma_px = j.value("sigma_px", s.sigma_px);
  s.peak_enhancement = j.value("peak_enhancement", s.peak_enhancement);
  s.absorption_kappa = j.value("absorption_kappa", s.absorption_kappa);
  s.label_threshold = j.value("label_threshold", s.label_threshold);
  s.source_id = j.value("source_id", s.source_id);
}

void to_json(nlohmann::json& j, const BandTexture& s) {
  j = {{"id", s.id}, {"base", s.base}, {"amplitude", s.amplitude}, {"correlation_px", s.correlation_px}};
}

void from_json(const nlohmann::json& j, BandTexture& s) {
  s = BandTexture{};
  j.at("id").get_to(s.id);
  s.base = j.value("base", s.base);
  s.amplitude = j.value("amplitude", s.amplitude);
  s.correlation_px = j.value("correlation_px", s.correlation_px);
}

void to_json(nlohmann::json& j, const LinearRelation& s) {
  j = {{"predictors", s.predictors}, {"coefficients", s.coefficients}, {"intercept", s.intercept}};
}

void from_json(const nlohmann::json& j, LinearRelation& s) {
  s = LinearRelation{};
  if (j.contains("predictors")) j.at("predictors").get_to(s.predictors);
  if (j.contains("coefficients")) j.at("coefficients").get_to(s.coefficients);
  s.intercept = j.value("intercept", s.intercept);
}

void to_json(nlohmann::json& j, const SceneConfig& s) {
  j = {{"width", s.width},
       {"height", s.height},
       {"pixel_size_m", s.pixel_size_m},
       {"textures", s.textures},
       {"relation", s.relation},
       {"noise", s.noise},
       {"artifact_band", s.artifact_band},
       {"plumes", s.plumes},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SceneConfig& s) {
  s = SceneConfig{};
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.pixel_size_m = j.value("pixel_size_m", s.pixel_size_m);
  if (j.contains("textures")) j.at("textures").get_to(s.textures);
  if (j.contains("relation")) j.at("relation").get_to(s.relation);
  if (j.contains("noise")) j.at("noise").get_to(s.noise);
  s.artifact_band = j.value("artifact_band", s.artifact_band);
  if (j.contains("plumes")) j.at("plumes").get_to(s.plumes);
  s.seed = j.value("seed", s.seed);
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::empty_input, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<long long>(std::ceil(p * n / 100.0));
  rank = std::clamp<long long>(rank, 1, static_cast<long long>(values.size()));
  return values[static_cast<std::size_t>(rank - 1)];
}

Mask background_mask_percentile(const Field& ratio_map, double p_lo, double p_hi) {
  if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 100.0)) {
    throw Error(Errc::invalid_argument, "need 0 <= p_lo < p_hi <= 100");
  }
  if (ratio_map.size() == 0) throw Error(Errc::empty_input, "empty ratio map");
  const std::vector<double> values = to_vector(ratio_map);
  const double lo = nearest_rank_percentile(values, p_lo);
  const double hi = nearest_rank_percentile(values, p_hi);
  const Raster<double> x = ratio_map.cast<double>();
  return ((x >= lo) && (x <= hi)).cast<std::uint8_t>();
}

CleanB12 simulate_clean_b12(const Scene& scene, const RegressionModel& model) {
  CleanB12 out;
  out.values = predict_r12(model, scene);
  out.variability_loss = std::all_of(model.coefficients.begin(), model.coefficients.end(),
                                     [](double b) { return b == 0.0; });
  return out;
}

Field add_gaussian_noise(const Field& field, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(Errc::invalid_argument, "sigma must be >= 0");
  if (sigma == 0.0) return field;
  Rng rng(seed);
  Field out(field.rows(), field.cols());
  for (Eigen::Index r = 0; r < field.rows(); ++r)
    for (Eigen::Index c = 0; c < field.cols(); ++c) {
      const double v = static_cast<double>(field(r, c)) + sigma * rng.normal();
      out(r, c) = static_cast<float>(std::max(v, 0.0));
    }
  return out;
}

ArtifactResult add_cluster_artifacts(const Field& field, const NoiseSpec& spec) {
  validate(spec);
  ArtifactResult out{field, Mask::Zero(field.rows(), field.cols())};
  if (spec.artifact_count == 0 || field.size() == 0) return out;

  Rng rng(spec.seed);
  Raster<double> total = Raster<double>::Zero(field.rows(), field.cols());
  const double two_r2 = 2.0 * spec.artifact_radius_px * spec.artifact_radius_px;
  const double cutoff = 0.05 * std::abs(spec.artifact_amplitude);
  for (int i = 0; i < spec.artifact_count; ++i) {
    const auto cx = static_cast<double>(rng.below(static_cast<std::uint64_t>(field.cols())));
    const auto cy = static_cast<double>(rng.below(static_cast<std::uint64_t>(field.rows())));
    const double amplitude = (i % 2 == 0 ? 1.0 : -1.0) * spec.artifact_amplitude;
    for (Eigen::Index r = 0; r < field.rows(); ++r)
      for (Eigen::Index c = 0; c < field.cols(); ++c) {
        const double dx = static_cast<double>(c) - cx;
        const double dy = static_cast<double>(r) - cy;
        const double bump = amplitude * std::exp(-(dx * dx + dy * dy) / two_r2);
        total(r, c) += bump;
        if (std::abs(bump) > cutoff && cutoff > 0.0) out.footprint(r, c) = 1;
      }
  }
  out.field = (field.cast<double>() + total).max(0.0).cast<float>();
  return out;
}

Raster<double> plume_enhancement(const PlumeSpec& spec, int width, int height) {
  Raster<double> e(height, width);
  const double two_s2 = 2.0 * spec.sigma_px * spec.sigma_px;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double dx = x - spec.center_x;
      const double dy = y - spec.center_y;
      e(y, x) = spec.peak_enhancement * std::exp(-(dx * dx + dy * dy) / two_s2);
    }
  return e;
}

PlumeResult inject_plume(const Scene& scene, const PlumeSpec& spec, const Mask* existing_labels) {
  validate(spec);
  (void)scene.band("B12");
  PlumeResult out{scene, Mask::Zero(scene.height, scene.width), false};
  if (existing_labels) {
    require_same_shape(*existing_labels, out.mask, "existing labels");
    if ((*existing_labels == static_cast<std::uint8_t>(spec.source_id)).any()) {
      throw Error(Errc::label_collision,
                  "source id " + std::to_string(spec.source_id) + " already labelled");
    }
    out.mask = *existing_labels;
  }

  const Raster<double> e = plume_enhancement(spec, scene.width, scene.height);
  const double label_level = spec.label_threshold * spec.peak_enhancement;
  Field& b12 = out.scene.band("B12");
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x) {
      const double ex = e(y, x);
      if (ex > 0.0) {
        b12(y, x) = static_cast<float>(static_cast<double>(b12(y, x)) *
                                       std::exp(-spec.absorption_kappa * ex));
      }
      if (ex > 0.0 && ex >= label_level && out.mask(y, x) == 0) {
        out.mask(y, x) = static_cast<std::uint8_t>(spec.source_id);
      }
    }

  if (spec.peak_enhancement > 0.0) {
    const double radius = spec.sigma_px * std::sqrt(-2.0 * std::log(spec.label_threshold));
    out.clipped = spec.center_x - radius < 0.0 || spec.center_y - radius < 0.0 ||
                  spec.center_x + radius > scene.width - 1 ||
                  spec.center_y + radius > scene.height - 1;
  }
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sq = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sq += v * v;
  }
  // Unit L2 norm keeps unit-variance white noise at unit variance.
  for (double& v : k) v /= std::sqrt(sq);
  return k;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Raster<double> correlated_texture(int width, int height, double correlation_px, Rng& rng) {
  Raster<double> white(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) white(y, x) = rng.normal();
  if (correlation_px <= 0.0) return white;

  const std::vector<double> k = gaussian_kernel(correlation_px);
  const int radius = static_cast<int>(k.size() / 2);
  Raster<double> rows(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[static_cast<std::size_t>(i + radius)] * white(y, reflect(x + i, width));
      }
      rows(y, x) = acc;
    }
  Raster<double> out(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[static_cast<std::size_t>(i + radius)] * rows(reflect(y + i, height), x);
      }
      out(y, x) = acc;
    }
  return out;
}

GeneratedScene generate_scene(const SceneConfig& config) {
  validate(config);
  GeneratedScene out;
  Scene& scene = out.scene;
  scene.width = config.width;
  scene.height = config.height;
  scene.pixel_size_m = config.pixel_size_m;
  scene.meta = {{"generator", "s2plume.synth"}, {"seed", config.seed}, {"units", "arbitrary radiance"}};

  Rng texture_rng(config.seed);
  for (const auto& t : config.textures) {
    const Raster<double> tex = correlated_texture(config.width, config.height, t.correlation_px, texture_rng);
    scene.bands[t.id] = (t.base + t.amplitude * tex).max(0.0).cast<float>();
  }

  Raster<double> b12 = Raster<double>::Constant(config.height, config.width, config.relation.intercept);
  for (std::size_t i = 0; i < config.relation.predictors.size(); ++i) {
    b12 += config.relation.coefficients[i] * scene.band(config.relation.predictors[i]).cast<double>();
  }
  if ((b12 < 0.0).any()) {
    throw Error(Errc::invariant, "linear relation yields negative B12; raise the intercept or bases");
  }
  scene.bands["B12"] = b12.cast<float>();

  if (config.noise.gaussian_sigma > 0.0) {
    std::uint64_t stream = 0;
    for (auto& [id, field] : scene.bands) {
      field = add_gaussian_noise(field, config.noise.gaussian_sigma,
                                 derive_seed(config.noise.seed, stream++));
    }
  }
  NoiseSpec artifact_spec = config.noise;
  artifact_spec.seed = derive_seed(config.noise.seed, 1000);
  ArtifactResult art = add_cluster_artifacts(scene.band(config.artifact_band), artifact_spec);
  scene.band(config.artifact_band) = std::move(art.field);
  out.artifacts = std::move(art.footprint);

  out.mask = Mask::Zero(config.height, config.width);
  for (const auto& plume : config.plumes) {
    PlumeResult injected = inject_plume(scene, plume, &out.mask);
    scene = std::move(injected.scene);
    out.mask = std::move(injected.mask);
    out.clipped_plumes += injected.clipped ? 1 : 0;
  }
  validate(scene);
  return out;
}

}  // namespace s2plume
