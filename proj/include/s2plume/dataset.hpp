#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2plume/enhance.hpp"
#include "s2plume/raster.hpp"
#include "s2plume/synth.hpp"

namespace s2plume {

enum class AugmentKind { hflip, vflip, rot90, rot180, rot270, brightness, contrast };

struct AugmentOp {
  AugmentKind kind = AugmentKind::hflip;
  double factor = 1.0;  // brightness/contrast only
  bool operator==(const AugmentOp&) const = default;
};

// "hflip", "rot90", "brightness(1.2)", ...
AugmentOp parse_augment(const std::string& text);
std::string to_string(const AugmentOp& op);

struct Provenance {
  std::string scene_id;
  int origin_x = 0;
  int origin_y = 0;
  int tile_px = 0;
  std::vector<AugmentOp> chain;
  std::uint64_t seed = 0;  // scene generation seed (0 for file inputs)
  std::uint64_t augment_seed = 0;
};

struct Sample {
  std::string id;
  FeatureStack stack;
  Mask mask;
  Provenance provenance;

  bool has_plume() const { return (mask != 0).any(); }
};

// Geometric ops move stack and mask together; photometric ops touch only the
// stack: brightness x*f, contrast mu + (x - mu)*f with the per-channel tile mean.
// rot90 is a quarter turn counter-clockwise on screen.
Sample augment(const Sample& sample, const AugmentOp& op);

// Raster-order tiles at origins 0, stride, ... plus an edge-aligned final
// tile when the stride grid does not reach the border.
std::vector<Sample> tile(const FeatureStack& stack, const Mask& mask, int tile_px, int stride_px,
                         const std::string& scene_id = "scene");

// Tile origins along one axis.
std::vector<int> tile_origins(int extent, int tile_px, int stride_px);

enum class Split { train, val };
enum class SplitMode { random, ordered };

struct SampleRecord {
  std::string id;
  Split split = Split::train;
  std::string stack_path;  // relative to the manifest directory
  std::string mask_path;
  bool has_plume = false;
  Provenance provenance;
};

struct Manifest {
  std::string dataset_id;
  std::vector<SampleRecord> samples;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::filesystem::path base_dir;  // where relative paths resolve; not serialized
};

// Deterministic split. random: seeded Fisher-Yates shuffle; ordered: input
// order, last samples to val. With stratify, plume and plume-free samples are
// split separately. The val count per group is round(n * val_fraction).
Manifest split_manifest(const std::vector<Sample>& samples, double val_fraction, std::uint64_t seed,
                        bool stratify, SplitMode mode = SplitMode::random);

void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);
void to_json(nlohmann::json& j, const Manifest& m);
void from_json(const nlohmann::json& j, Manifest& m);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the compact JSON dump.
std::string config_hash(const nlohmann::json& config);

// Re-cuts and re-augments a sample from its scene-level stack and mask.
Sample regenerate_sample(const FeatureStack& stack, const Mask& mask, const Provenance& provenance,
                         const std::string& id);

// Random plume placement for synthetic datasets.
struct PlumeSampler {
  int count_min = 1;
  int count_max = 2;
  double plume_free_fraction = 0.25;
  double sigma_min = 1.5;
  double sigma_max = 3.0;
  double peak_enhancement = 1.0;
  double absorption_kappa = 0.5;
  double label_threshold = 0.3;
  int margin_px = 4;
};

std::vector<PlumeSpec> sample_plumes(const PlumeSampler& sampler, int width, int height,
                                     std::uint64_t seed);

struct InputPair {
  std::string scene;
  std::string mask;
};

struct DatasetConfig {
  std::string dataset_id = "synthetic";
  std::uint64_t seed = 0;
  // Synthetic source, used when inputs is empty.
  int scene_count = 8;
  SceneConfig scene;
  PlumeSampler plumes;
  // File source: BRF scene + label mask pairs.
  std::vector<InputPair> inputs;
  EnhanceConfig enhance;
  int tile_px = 32;
  int stride_px = 32;
  double val_fraction = 0.2;
  bool stratify = true;
  SplitMode split_mode = SplitMode::random;
  int augment_copies = 1;
  std::vector<AugmentOp> augment_ops{{AugmentKind::hflip, 1.0}, {AugmentKind::vflip, 1.0},
                                     {AugmentKind::rot90, 1.0}, {AugmentKind::rot180, 1.0},
                                     {AugmentKind::rot270, 1.0}, {AugmentKind::brightness, 1.1},
                                     {AugmentKind::contrast, 1.2}};
};

void to_json(nlohmann::json& j, const PlumeSampler& s);
void from_json(const nlohmann::json& j, PlumeSampler& s);
void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

// Scene-level products for scene index i of a synthetic config.
struct SceneProducts {
  std::string scene_id;
  std::uint64_t seed = 0;
  FeatureStack stack;
  Mask mask;
};

SceneProducts synthesize_scene(const DatasetConfig& config, int index);

// Generates (or reads) scenes, enhances, tiles, splits, augments the train
// split, and writes <out>/<dataset_id>/<sample>/{stack,mask}.brf plus
// <out>/manifest.json. Output is independent of jobs.
Manifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                       const std::filesystem::path& config_dir = {}, int jobs = 1);

}  // namespace s2plume
