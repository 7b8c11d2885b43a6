#pragma once

#include <cstdint>
#include <vector>

#include "s2plume/enhance.hpp"
#include "s2plume/raster.hpp"
#include "s2plume/rng.hpp"

namespace s2plume {

struct NoiseSpec {
  double gaussian_sigma = 0.0;
  int artifact_count = 0;
  double artifact_radius_px = 2.0;
  double artifact_amplitude = 0.0;
  std::uint64_t seed = 0;
};

struct PlumeSpec {
  double center_x = 0.0;
  double center_y = 0.0;
  double sigma_px = 1.0;
  double peak_enhancement = 1.0;
  double absorption_kappa = 0.1;
  double label_threshold = 0.5;
  int source_id = 1;
};

struct BandTexture {
  BandId id;
  double base = 100.0;
  double amplitude = 10.0;
  double correlation_px = 4.0;
};

// B12 = intercept + sum coefficients[i] * predictors[i], exactly.
struct LinearRelation {
  std::vector<BandId> predictors{"B11"};
  std::vector<double> coefficients{0.8};
  double intercept = 5.0;
};

struct SceneConfig {
  int width = 64;
  int height = 64;
  double pixel_size_m = 20.0;
  std::vector<BandTexture> textures{{"B11", 100.0, 10.0, 4.0}};
  LinearRelation relation;
  NoiseSpec noise;
  BandId artifact_band = "B12";
  std::vector<PlumeSpec> plumes;
  std::uint64_t seed = 0;
};

void validate(const NoiseSpec& spec);
void validate(const PlumeSpec& spec);
void validate(const SceneConfig& config);

void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);
void to_json(nlohmann::json& j, const PlumeSpec& s);
void from_json(const nlohmann::json& j, PlumeSpec& s);
void to_json(nlohmann::json& j, const BandTexture& s);
void from_json(const nlohmann::json& j, BandTexture& s);
void to_json(nlohmann::json& j, const LinearRelation& s);
void from_json(const nlohmann::json& j, LinearRelation& s);
void to_json(nlohmann::json& j, const SceneConfig& s);
void from_json(const nlohmann::json& j, SceneConfig& s);

// Nearest-rank percentile Q(p): the value at 1-based rank ceil(p * n / 100)
// of the sorted sample (rank clamped to [1, n]).
double nearest_rank_percentile(std::vector<double> sorted_or_not, double p);

// 1 where Q(p_lo) <= value <= Q(p_hi), 0 elsewhere.
Mask background_mask_percentile(const Field& ratio_map, double p_lo, double p_hi);

struct CleanB12 {
  Field values;
  bool variability_loss = false;  // model ignores its predictors: constant output
};

CleanB12 simulate_clean_b12(const Scene& scene, const RegressionModel& model);

// x + sigma * N(0,1), draws in row-major order, clamped at 0 from below.
Field add_gaussian_noise(const Field& field, double sigma, std::uint64_t seed);

struct ArtifactResult {
  Field field;
  Mask footprint;  // 1 where some bump exceeds 5% of the amplitude
};

// Gaussian bumps of alternating sign (+, -, +, ...) at integer centers drawn
// uniformly, per artifact: x then y.
ArtifactResult add_cluster_artifacts(const Field& field, const NoiseSpec& spec);

struct PlumeResult {
  Scene scene;
  Mask mask;
  bool clipped = false;  // labelled footprint would extend past the scene edge
};

// Beer-Lambert style suppression of B12 by a Gaussian enhancement field E:
// B12 <- B12 * exp(-kappa * E). The label is {E >= threshold * peak, E > 0}.
// When existing_labels is given the new label is merged into a copy of it
// (already-labelled pixels keep their label); a source_id already present in
// it is an error.
PlumeResult inject_plume(const Scene& scene, const PlumeSpec& spec,
                         const Mask* existing_labels = nullptr);

// Enhancement field of a plume, evaluated at integer pixel coordinates.
Raster<double> plume_enhancement(const PlumeSpec& spec, int width, int height);

// Separable Gaussian-smoothed white noise scaled to unit variance in the
// interior. correlation_px == 0 gives white noise.
Raster<double> correlated_texture(int width, int height, double correlation_px, Rng& rng);

struct GeneratedScene {
  Scene scene;
  Mask mask;
  Mask artifacts;
  int clipped_plumes = 0;
};

// Textures (config order), then B12 from the linear relation, then Gaussian
// noise on every band (scene band order), then artifacts on artifact_band,
// then plumes in list order.
GeneratedScene generate_scene(const SceneConfig& config);

}  // namespace s2plume
