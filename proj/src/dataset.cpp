#include "s2plume/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "s2plume/brf.hpp"
#include "s2plume/rng.hpp"

namespace s2plume {

namespace {

const std::map<std::string, AugmentKind> kAugmentNames = {
    {"hflip", AugmentKind::hflip},   {"vflip", AugmentKind::vflip},
    {"rot90", AugmentKind::rot90},   {"rot180", AugmentKind::rot180},
    {"rot270", AugmentKind::rot270}, {"brightness", AugmentKind::brightness},
    {"contrast", AugmentKind::contrast}};

bool photometric(AugmentKind k) { return k == AugmentKind::brightness || k == AugmentKind::contrast; }

template <typename Scalar>
Raster<Scalar> rotate_ccw(const Raster<Scalar>& x) {
  // out(i, j) = in(j, W - 1 - i)
  return x.transpose().colwise().reverse();
}

template <typename Scalar>
Raster<Scalar> apply_geometric(const Raster<Scalar>& x, AugmentKind kind) {
  switch (kind) {
    case AugmentKind::hflip: return x.rowwise().reverse();
    case AugmentKind::vflip: return x.colwise().reverse();
    case AugmentKind::rot90: return rotate_ccw(x);
    case AugmentKind::rot180: return x.reverse();
    case AugmentKind::rot270: return rotate_ccw(Raster<Scalar>(x.reverse()));
    default: return x;
  }
}

}  // namespace

AugmentOp parse_augment(const std::string& text) {
  const auto paren = text.find('(');
  const std::string name = text.substr(0, paren);
  auto it = kAugmentNames.find(name);
  if (it == kAugmentNames.end()) throw Error(Errc::invalid_argument, "unknown augmentation " + text);
  AugmentOp op{it->second, 1.0};
  if (paren != std::string::npos) {
    if (text.back() != ')') throw Error(Errc::invalid_argument, "bad augmentation " + text);
    try {
      op.factor = std::stod(text.substr(paren + 1, text.size() - paren - 2));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad augmentation factor in " + text);
    }
  } else if (photometric(op.kind)) {
    throw Error(Errc::invalid_argument, name + " needs a factor, e.g. " + name + "(1.1)");
  }
  return op;
}

std::string to_string(const AugmentOp& op) {
  for (const auto& [name, kind] : kAugmentNames) {
    if (kind != op.kind) continue;
    if (!photometric(kind)) return name;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", op.factor);
    return name + "(" + buf + ")";
  }
  return "?";
}

Sample augment(const Sample& sample, const AugmentOp& op) {
  Sample out = sample;
  out.provenance.chain.push_back(op);
  if (photometric(op.kind)) {
    if (!(op.factor > 0.0) || !std::isfinite(op.factor)) {
      throw Error(Errc::invalid_argument, "photometric factor must be > 0");
    }
    for (auto& ch : out.stack.channels) {
      if (op.kind == AugmentKind::brightness) {
        ch = (ch.cast<double>() * op.factor).cast<float>();
      } else {
        const double mu = ch.cast<double>().mean();
        ch = (mu + (ch.cast<double>() - mu) * op.factor).cast<float>();
      }
    }
    return out;
  }
  for (auto& ch : out.stack.channels) ch = apply_geometric(ch, op.kind);
  out.mask = apply_geometric(out.mask, op.kind);
  return out;
}

std::vector<int> tile_origins(int extent, int tile_px, int stride_px) {
  std::vector<int> origins;
  for (int o = 0; o + tile_px <= extent; o += stride_px) origins.push_back(o);
  if (origins.back() + tile_px < extent) origins.push_back(extent - tile_px);
  return origins;
}

std::vector<Sample> tile(const FeatureStack& stack, const Mask& mask, int tile_px, int stride_px,
                         const std::string& scene_id) {
  validate(stack);
  require_same_shape(stack.channels[0], mask, "tile");
  if (stride_px < 1) throw Error(Errc::invalid_argument, "stride must be >= 1");
  if (tile_px < 1 || tile_px > std::min(stack.width(), stack.height())) {
    throw Error(Errc::invalid_argument, "tile larger than scene");
  }
  std::vector<Sample> out;
  const auto xs = tile_origins(stack.width(), tile_px, stride_px);
  const auto ys = tile_origins(stack.height(), tile_px, stride_px);
  for (int y : ys) {
    for (int x : xs) {
      Sample s;
      char id[32];
      std::snprintf(id, sizeof id, "_t%04zu", out.size());
      s.id = scene_id + id;
      for (std::size_t c = 0; c < 3; ++c) s.stack.channels[c] = stack.channels[c].block(y, x, tile_px, tile_px);
      s.stack.normalization = stack.normalization;
      s.mask = mask.block(y, x, tile_px, tile_px);
      s.provenance.scene_id = scene_id;
      s.provenance.origin_x = x;
      s.provenance.origin_y = y;
      s.provenance.tile_px = tile_px;
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
}

SampleRecord record_for(const Sample& s, Split split) {
  SampleRecord r;
  r.id = s.id;
  r.split = split;
  r.has_plume = s.has_plume();
  r.provenance = s.provenance;
  return r;
}

}  // namespace

Manifest split_manifest(const std::vector<Sample>& samples, double val_fraction, std::uint64_t seed,
                        bool stratify, SplitMode mode) {
  if (samples.size() < 2) throw Error(Errc::invalid_argument, "need at least 2 samples to split");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "val_fraction must be in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> groups(stratify ? 2 : 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    groups[stratify && samples[i].has_plume() ? 1 : 0].push_back(i);
  }
  Rng rng(seed);
  std::vector<Split> split(samples.size(), Split::train);
  std::size_t n_val = 0;
  for (auto& group : groups) {
    if (mode == SplitMode::random) shuffle(group, rng);
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(group.size()) * val_fraction));
    for (std::size_t j = group.size() - std::min(k, group.size()); j < group.size(); ++j) {
      split[group[j]] = Split::val;
    }
    n_val += std::min(k, group.size());
  }
  if (n_val == 0 || n_val == samples.size()) {
    throw Error(Errc::invalid_argument, "val_fraction leaves a split empty");
  }
  Manifest m;
  m.seed = seed;
  for (std::size_t i = 0; i < samples.size(); ++i) m.samples.push_back(record_for(samples[i], split[i]));
  return m;
}

void to_json(nlohmann::json& j, const Provenance& p) {
  std::vector<std::string> chain;
  for (const auto& op : p.chain) chain.push_back(to_string(op));
  j = {{"scene_id", p.scene_id},
       {"origin", {p.origin_x, p.origin_y}},
       {"tile_px", p.tile_px},
       {"augment", chain},
       {"seed", p.seed},
       {"augment_seed", p.augment_seed}};
}

void from_json(const nlohmann::json& j, Provenance& p) {
  p = Provenance{};
  p.scene_id = j.value("scene_id", std::string{});
  if (j.contains("origin")) {
    p.origin_x = j["origin"].at(0).get<int>();
    p.origin_y = j["origin"].at(1).get<int>();
  }
  p.tile_px = j.value("tile_px", 0);
  for (const auto& s : j.value("augment", std::vector<std::string>{})) p.chain.push_back(parse_augment(s));
  p.seed = j.value("seed", std::uint64_t{0});
  p.augment_seed = j.value("augment_seed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const Manifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& r : m.samples) {
    samples.push_back({{"id", r.id},
                       {"split", r.split == Split::val ? "val" : "train"},
                       {"stack", r.stack_path},
                       {"mask", r.mask_path},
                       {"has_plume", r.has_plume},
                       {"provenance", r.provenance}});
  }
  j = {{"dataset_id", m.dataset_id},
       {"seed", m.seed},
       {"config_hash", m.config_hash},
       {"config", m.config},
       {"samples", samples}};
}

void from_json(const nlohmann::json& j, Manifest& m) {
  m = Manifest{};
  m.dataset_id = j.value("dataset_id", std::string{});
  m.seed = j.value("seed", std::uint64_t{0});
  m.config_hash = j.value("config_hash", std::string{});
  m.config = j.value("config", nlohmann::json::object());
  for (const auto& s : j.at("samples")) {
    SampleRecord r;
    r.id = s.at("id").get<std::string>();
    const std::string split = s.value("split", "train");
    if (split != "train" && split != "val") throw Error(Errc::invalid_argument, "bad split " + split);
    r.split = split == "val" ? Split::val : Split::train;
    r.stack_path = s.value("stack", std::string{});
    r.mask_path = s.value("mask", std::string{});
    r.has_plume = s.value("has_plume", false);
    if (s.contains("provenance")) s.at("provenance").get_to(r.provenance);
    m.samples.push_back(std::move(r));
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open manifest " + path.string());
  Manifest m;
  try {
    m = nlohmann::json::parse(in).get<Manifest>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, "bad manifest " + path.string() + ": " + e.what());
  }
  m.base_dir = path.parent_path();
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write manifest " + path.string());
  out << nlohmann::json(manifest).dump(2) << "\n";
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Sample regenerate_sample(const FeatureStack& stack, const Mask& mask, const Provenance& provenance,
                         const std::string& id) {
  const int t = provenance.tile_px;
  if (t < 1 || provenance.origin_x < 0 || provenance.origin_y < 0 ||
      provenance.origin_x + t > stack.width() || provenance.origin_y + t > stack.height()) {
    throw Error(Errc::invalid_argument, "provenance tile lies outside the scene");
  }
  Sample s;
  s.id = id;
  for (std::size_t c = 0; c < 3; ++c) {
    s.stack.channels[c] = stack.channels[c].block(provenance.origin_y, provenance.origin_x, t, t);
  }
  s.stack.normalization = stack.normalization;
  s.mask = mask.block(provenance.origin_y, provenance.origin_x, t, t);
  Provenance base = provenance;
  base.chain.clear();
  s.provenance = base;
  for (const auto& op : provenance.chain) s = augment(s, op);
  return s;
}

std::vector<PlumeSpec> sample_plumes(const PlumeSampler& sampler, int width, int height,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PlumeSpec> out;
  if (rng.uniform() < sampler.plume_free_fraction) return out;
  const int span = sampler.count_max - sampler.count_min + 1;
  if (span < 1 || sampler.count_min < 0) throw Error(Errc::invalid_argument, "bad plume count range");
  const int count = sampler.count_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  const int m = sampler.margin_px;
  if (width - 2 * m < 1 || height - 2 * m < 1) throw Error(Errc::invalid_argument, "plume margin too large");
  for (int i = 0; i < count; ++i) {
    PlumeSpec p;
    p.center_x = m + static_cast<double>(rng.below(static_cast<std::uint64_t>(width - 2 * m)));
    p.center_y = m + static_cast<double>(rng.below(static_cast<std::uint64_t>(height - 2 * m)));
    p.sigma_px = sampler.sigma_min + (sampler.sigma_max - sampler.sigma_min) * rng.uniform();
    p.peak_enhancement = sampler.peak_enhancement;
    p.absorption_kappa = sampler.absorption_kappa;
    p.label_threshold = sampler.label_threshold;
    p.source_id = i + 1;
    out.push_back(p);
  }
  return out;
}

void to_json(nlohmann::json& j, const PlumeSampler& s) {
  j = {{"count_min", s.count_min},
       {"count_max", s.count_max},
       {"plume_free_fraction", s.plume_free_fraction},
       {"sigma_min", s.sigma_min},
       {"sigma_max", s.sigma_max},
       {"peak_enhancement", s.peak_enhancement},
       {"absorption_kappa", s.absorption_kappa},
       {"label_threshold", s.label_threshold},
       {"margin_px", s.margin_px}};
}

void from_json(const nlohmann::json& j, PlumeSampler& s) {
  s = PlumeSampler{};
  s.count_min = j.value("count_min", s.count_min);
  s.count_max = j.value("count_max", s.count_max);
  s.plume_free_fraction = j.value("plume_free_fraction", s.plume_free_fraction);
  s.sigma_min = j.value("sigma_min", s.sigma_min);
  s.sigma_max = j.value("sigma_max", s.sigma_max);
  s.peak_enhancement = j.value("peak_enhancement", s.peak_enhancement);
  s.absorption_kappa = j.value("absorption_kappa", s.absorption_kappa);
  s.label_threshold = j.value("label_threshold", s.label_threshold);
  s.margin_px = j.value("margin_px", s.margin_px);
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
  std::vector<std::string> ops;
  for (const auto& op : c.augment_ops) ops.push_back(to_string(op));
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : c.inputs) inputs.push_back({{"scene", in.scene}, {"mask", in.mask}});
  j = {{"dataset_id", c.dataset_id},
       {"seed", c.seed},
       {"scene_count", c.scene_count},
       {"scene", c.scene},
       {"plumes", c.plumes},
       {"inputs", inputs},
       {"enhance", c.enhance},
       {"tile_px", c.tile_px},
       {"stride_px", c.stride_px},
       {"val_fraction", c.val_fraction},
       {"stratify", c.stratify},
       {"split_mode", c.split_mode == SplitMode::random ? "random" : "ordered"},
       {"augment_copies", c.augment_copies},
       {"augment_ops", ops}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
  c = DatasetConfig{};
  c.dataset_id = j.value("dataset_id", c.dataset_id);
  c.seed = j.value("seed", c.seed);
  c.scene_count = j.value("scene_count", c.scene_count);
  if (j.contains("scene")) j.at("scene").get_to(c.scene);
  if (j.contains("plumes")) j.at("plumes").get_to(c.plumes);
  for (const auto& in : j.value("inputs", nlohmann::json::array())) {
    c.inputs.push_back({in.at("scene").get<std::string>(), in.at("mask").get<std::string>()});
  }
  if (j.contains("enhance")) j.at("enhance").get_to(c.enhance);
  c.tile_px = j.value("tile_px", c.tile_px);
  c.stride_px = j.value("stride_px", c.stride_px);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.stratify = j.value("stratify", c.stratify);
  const std::string mode = j.value("split_mode", std::string("random"));
  if (mode != "random" && mode != "ordered") throw Error(Errc::invalid_argument, "bad split_mode " + mode);
  c.split_mode = mode == "random" ? SplitMode::random : SplitMode::ordered;
  c.augment_copies = j.value("augment_copies", c.augment_copies);
  if (j.contains("augment_ops")) {
    c.augment_ops.clear();
    for (const auto& s : j.at("augment_ops")) c.augment_ops.push_back(parse_augment(s.get<std::string>()));
  }
}

namespace {

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d", index);
  return buf;
}

}  // namespace

SceneProducts synthesize_scene(const DatasetConfig& config, int index) {
  SceneProducts out;
  out.scene_id = scene_name(index);
  out.seed = derive_seed(config.seed, static_cast<std::uint64_t>(index));
  SceneConfig sc = config.scene;
  sc.seed = out.seed;
  sc.noise.seed = derive_seed(out.seed, 1);
  sc.plumes = sample_plumes(config.plumes, sc.width, sc.height, derive_seed(out.seed, 2));
  GeneratedScene g = generate_scene(sc);
  out.stack = enhance_scene(g.scene, config.enhance).stack;
  out.mask = std::move(g.mask);
  return out;
}

Manifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir,
                       const std::filesystem::path& config_dir, int jobs) {
  if (config.augment_copies < 0) throw Error(Errc::invalid_argument, "augment_copies must be >= 0");
  if (config.augment_copies > 0 && config.augment_ops.empty()) {
    throw Error(Errc::invalid_argument, "augment_copies > 0 needs augment_ops");
  }
  const bool from_files = !config.inputs.empty();
  const int n_scenes = from_files ? static_cast<int>(config.inputs.size()) : config.scene_count;
  if (n_scenes < 1) throw Error(Errc::invalid_argument, "dataset needs at least one scene");

  std::vector<SceneProducts> scenes(static_cast<std::size_t>(n_scenes));
  auto produce = [&](int i) {
    if (!from_files) {
      scenes[static_cast<std::size_t>(i)] = synthesize_scene(config, i);
      return;
    }
    const auto& in = config.inputs[static_cast<std::size_t>(i)];
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? path : config_dir / path;
    };
    SceneProducts s;
    s.scene_id = scene_name(i);
    s.stack = enhance_scene(read_scene(resolve(in.scene)), config.enhance).stack;
    s.mask = read_mask(resolve(in.mask));
    require_same_shape(s.stack.channels[0], s.mask, "input scene and mask");
    scenes[static_cast<std::size_t>(i)] = std::move(s);
  };

  // Each worker writes only its own slots, so the result is independent of jobs.
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n_scenes; i = next++) {
      try {
        produce(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Sample> tiles;
  for (const auto& s : scenes) {
    for (auto& t : tile(s.stack, s.mask, config.tile_px, config.stride_px, s.scene_id)) {
      t.provenance.seed = s.seed;
      tiles.push_back(std::move(t));
    }
  }

  Manifest manifest =
      split_manifest(tiles, config.val_fraction, derive_seed(config.seed, 0x5EED), config.stratify,
                     config.split_mode);
  manifest.dataset_id = config.dataset_id;
  manifest.seed = config.seed;
  manifest.config = config;
  manifest.config_hash = config_hash(manifest.config);

  std::vector<Sample> samples;
  std::vector<Split> splits;
  const std::uint64_t augment_root = derive_seed(config.seed, 0xA06);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const Split split = manifest.samples[i].split;
    samples.push_back(tiles[i]);
    splits.push_back(split);
    if (split != Split::train) continue;
    for (int k = 0; k < config.augment_copies; ++k) {
      const std::uint64_t seed = derive_seed(augment_root, i * 1000 + static_cast<std::size_t>(k));
      Rng rng(seed);
      const int length = 1 + static_cast<int>(rng.below(2));
      Sample aug = tiles[i];
      aug.provenance.augment_seed = seed;
      for (int step = 0; step < length; ++step) {
        aug = augment(aug, config.augment_ops[rng.below(config.augment_ops.size())]);
      }
      aug.id = tiles[i].id + "_a" + std::to_string(k + 1);
      samples.push_back(std::move(aug));
      splits.push_back(Split::train);
    }
  }

  manifest.samples.clear();
  const std::filesystem::path data_dir = out_dir / config.dataset_id;
  std::filesystem::create_directories(data_dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    std::filesystem::create_directories(data_dir / s.id);
    SampleRecord r = record_for(s, splits[i]);
    r.stack_path = (std::filesystem::path(config.dataset_id) / s.id / "stack.brf").generic_string();
    r.mask_path = (std::filesystem::path(config.dataset_id) / s.id / "mask.brf").generic_string();
    write_brf(s.stack, out_dir / r.stack_path);
    write_brf(s.mask, out_dir / r.mask_path);
    manifest.samples.push_back(std::move(r));
  }
  manifest.base_dir = out_dir;
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace s2plume
