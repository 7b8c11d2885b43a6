#include "s2plume/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "s2plume/brf.hpp"
#include "s2plume/dataset.hpp"
#include "s2plume/detect.hpp"
#include "s2plume/enhance.hpp"
#include "s2plume/evalmetrics.hpp"
#include "s2plume/image.hpp"
#include "s2plume/labeling.hpp"
#include "s2plume/rng.hpp"
#include "s2plume/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace s2plume {
namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, "bad JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

struct RunRecord {
  std::string subcommand;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::optional<std::uint64_t> seed;
};

void write_record(const RunRecord& rec, const fs::path& path, std::chrono::steady_clock::time_point start) {
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json j = {{"subcommand", rec.subcommand},
            {"config", rec.config},
            {"inputs", rec.inputs},
            {"outputs", rec.outputs},
            {"seed", rec.seed ? json(*rec.seed) : json(nullptr)},
            {"version", kVersion},
            {"duration_s", seconds}};
  write_json(j, path);
}

// "<dir>/stack.brf" -> "<dir>/stack<suffix>"
fs::path sidecar(fs::path out, const std::string& suffix) {
  out.replace_extension();
  return fs::path(out.string() + suffix);
}

struct SynthArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  bool ppm = false;
};

void run_synth(const SynthArgs& a, std::ostream& out) {
  SceneConfig cfg;
  if (!a.config.empty()) cfg = read_json(a.config).get<SceneConfig>();
  if (a.seed) {
    cfg.seed = *a.seed;
    cfg.noise.seed = derive_seed(*a.seed, 1);
  }
  const auto start = std::chrono::steady_clock::now();
  const GeneratedScene g = generate_scene(cfg);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_brf(g.scene, dir / "scene.brf");
  write_brf(g.mask, dir / "mask.brf");
  write_json(cfg, dir / "config.json");
  RunRecord rec{"synth", cfg, {{"config", a.config}},
                {{"scene", (dir / "scene.brf").string()}, {"mask", (dir / "mask.brf").string()}}, cfg.seed};
  if (a.ppm) {
    export_image(g.scene.band("B12"), dir / "b12.ppm");
    export_image(g.mask, dir / "mask.ppm");
  }
  if (g.clipped_plumes > 0) out << "warning: " << g.clipped_plumes << " plume footprint(s) clipped at the edge\n";
  write_record(rec, dir / "run.json", start);
}

struct EnhanceArgs {
  std::string scene, out, config, model, ppm;
  std::vector<std::string> predictors;
  std::optional<double> p_lo, p_hi;
  bool no_zscore = false;
};

void run_enhance(const EnhanceArgs& a, std::ostream& out) {
  EnhanceConfig cfg;
  if (!a.config.empty()) cfg = read_json(a.config).get<EnhanceConfig>();
  if (!a.predictors.empty()) cfg.predictors = a.predictors;
  if (a.p_lo) cfg.p_lo = *a.p_lo;
  if (a.p_hi) cfg.p_hi = *a.p_hi;
  if (a.no_zscore) cfg.normalize = false;
  const auto start = std::chrono::steady_clock::now();
  const Scene scene = read_scene(a.scene);
  const EnhanceResult r = enhance_scene(scene, cfg);
  const fs::path stack_path(a.out);
  ensure_parent(stack_path);
  write_brf(r.stack, stack_path);
  const fs::path model_path = a.model.empty() ? sidecar(stack_path, ".model.json") : fs::path(a.model);
  write_json(r.model, model_path);
  json outputs = {{"stack", stack_path.string()}, {"model", model_path.string()}};
  if (!a.ppm.empty()) {
    export_image(r.stack.varon(), a.ppm + ".V.ppm");
    export_image(r.stack.sanchez(), a.ppm + ".S.ppm");
    outputs["ppm"] = {a.ppm + ".V.ppm", a.ppm + ".S.ppm"};
  }
  if (r.floored > 0) out << "warning: " << r.floored << " ratio pixels floored (reference <= 1e-6)\n";
  json config = cfg;
  config["fit"] = {{"c", r.varon_scale.c},
                   {"c_prime", r.sanchez_scale.c},
                   {"background_pixels", r.varon_scale.n_pixels},
                   {"floored", r.floored}};
  write_record({"enhance", config, {{"scene", a.scene}}, outputs, std::nullopt}, sidecar(stack_path, ".run.json"),
               start);
}

struct LabelArgs {
  std::string field, out, vents, override_mask, contours, direction = "below", channel = "S", ppm;
  double threshold = 0.0;
  int connectivity = 8;
};

void run_label(const LabelArgs& a, std::ostream&) {
  const auto start = std::chrono::steady_clock::now();
  json vents_json = json::array();
  std::vector<Vent> vents;
  if (!a.vents.empty()) {
    vents_json = read_json(a.vents);
    vents = vents_json.get<std::vector<Vent>>();
  }
  const bool per_vent = std::any_of(vents.begin(), vents.end(), [](const Vent& v) { return v.threshold.has_value(); });
  Mask binary;
  if (!a.override_mask.empty()) {
    binary = (read_mask(a.override_mask) != std::uint8_t{0}).cast<std::uint8_t>();
  } else {
    const BrfObject obj = read_brf(a.field);
    Field field;
    if (const auto* f = std::get_if<Field>(&obj)) {
      field = *f;
    } else if (const auto* s = std::get_if<FeatureStack>(&obj)) {
      field = a.channel == "V" ? s->varon() : s->sanchez();
    } else {
      throw Error(Errc::invalid_argument, a.field + " is neither a field nor a stack");
    }
    if (a.direction != "below" && a.direction != "above") {
      throw Error(Errc::invalid_argument, "direction must be below or above");
    }
    const Direction dir = a.direction == "below" ? Direction::below : Direction::above;
    binary = per_vent ? mask_from_vent_thresholds(field, vents, a.threshold, dir)
                      : mask_from_threshold(field, a.threshold, dir);
  }

  const auto components = connected_components(binary, a.connectivity);
  Mask labels = binary;
  if (!vents.empty()) {
    labels = assign_sources(components, vents, static_cast<int>(binary.cols()), static_cast<int>(binary.rows()));
  }
  const fs::path out_path(a.out);
  ensure_parent(out_path);
  write_brf(labels, out_path);
  const fs::path contour_path = a.contours.empty() ? sidecar(out_path, ".contours.json") : fs::path(a.contours);
  write_json(contours_to_geojson(extract_contours(binary)), contour_path);
  json outputs = {{"labels", out_path.string()}, {"contours", contour_path.string()}};
  if (!a.ppm.empty()) {
    export_image(labels, a.ppm);
    outputs["ppm"] = a.ppm;
  }
  json config = {{"threshold", a.threshold},
                 {"direction", a.direction},
                 {"channel", a.channel},
                 {"connectivity", a.connectivity},
                 {"vents", vents_json},
                 {"components", components.size()}};
  write_record({"label", config, {{"field", a.field}, {"override", a.override_mask}}, outputs, std::nullopt},
               sidecar(out_path, ".run.json"), start);
}

struct DatasetArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

void run_dataset(const DatasetArgs& a, int jobs, std::ostream& out) {
  const fs::path config_path(a.config);
  DatasetConfig cfg = read_json(config_path).get<DatasetConfig>();
  if (a.seed) cfg.seed = *a.seed;
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(a.out);
  fs::create_directories(dir);
  const Manifest m = build_dataset(cfg, dir, config_path.parent_path(), jobs);
  std::size_t n_val = 0;
  for (const auto& s : m.samples) n_val += s.split == Split::val ? 1 : 0;
  out << m.samples.size() << " samples (" << m.samples.size() - n_val << " train, " << n_val << " val)\n";
  write_record({"dataset build", cfg, {{"config", a.config}}, {{"manifest", (dir / "manifest.json").string()}},
                cfg.seed},
               dir / "run.json", start);
}

struct DetectArgs {
  std::string in, out, config;
  std::optional<double> k;
  std::optional<std::string> channel;
  std::optional<int> min_area, connectivity;
};

void run_detect(const DetectArgs& a, std::ostream& out) {
  DetectorConfig cfg;
  if (!a.config.empty()) cfg = read_json(a.config).get<DetectorConfig>();
  if (a.k) cfg.k_sigma = *a.k;
  if (a.channel) cfg.channel = parse_channel(*a.channel);
  if (a.min_area) cfg.min_area_px = *a.min_area;
  if (a.connectivity) cfg.connectivity = *a.connectivity;
  const auto start = std::chrono::steady_clock::now();
  const Detection d = detect_plumes(read_stack(a.in), cfg);
  if (d.zero_mad) out << "warning: zero MAD in the selected channel; nothing detected\n";
  const fs::path out_path(a.out);
  ensure_parent(out_path);
  write_brf(d.mask, out_path);
  json config = cfg;
  write_record({"detect", config, {{"stack", a.in}}, {{"mask", out_path.string()}}, std::nullopt},
               sidecar(out_path, ".run.json"), start);
}

struct EvalArgs {
  std::string manifest, pred, out, split = "val";
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.split != "val" && a.split != "train") throw Error(Errc::invalid_argument, "split must be val or train");
  const auto start = std::chrono::steady_clock::now();
  const Manifest m = load_manifest(a.manifest);
  const EvalReport r = evaluate_manifest(m, a.pred, a.split == "val" ? Split::val : Split::train);
  const fs::path out_path(a.out);
  ensure_parent(out_path);
  write_json(r, out_path);
  fs::path table_path = out_path;
  table_path.replace_extension(".txt");
  std::ofstream(table_path) << format_table(r);
  out << "micro dice " << r.micro_dice << "  iou " << r.micro_iou << "\nmacro dice " << r.macro_dice << "  iou "
      << r.macro_iou << "\n";
  write_record({"eval", {{"split", a.split}}, {{"manifest", a.manifest}, {"pred", a.pred}},
                {{"report", out_path.string()}, {"table", table_path.string()}}, std::nullopt},
               sidecar(out_path, ".run.json"), start);
}

struct DiffArgs {
  std::string pred, gt, out, ppm;
};

void run_diffmap(const DiffArgs& a, std::ostream&) {
  const auto start = std::chrono::steady_clock::now();
  const Mask codes = difference_map(read_mask(a.pred), read_mask(a.gt));
  const fs::path out_path(a.out);
  ensure_parent(out_path);
  write_brf(codes, out_path);
  json outputs = {{"codes", out_path.string()}};
  if (!a.ppm.empty()) {
    export_image(codes, a.ppm, Colormap::diffmap);
    outputs["ppm"] = a.ppm;
  }
  write_record({"diffmap", json::object(), {{"pred", a.pred}, {"gt", a.gt}}, outputs, std::nullopt},
               sidecar(out_path, ".run.json"), start);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Methane plume feature engineering, synthesis, detection and scoring", "s2plume"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "Scene/tile-level worker threads")->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene and its plume mask");
  synth_cmd->add_option("--config", synth.config, "SceneConfig JSON (defaults when omitted)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Override the config seeds");
  synth_cmd->add_flag("--ppm", synth.ppm, "Also write PPM previews");

  EnhanceArgs enh;
  auto* enh_cmd = app.add_subcommand("enhance", "Scene to [V,S,V] feature stack");
  enh_cmd->add_option("--scene", enh.scene, "Scene BRF")->required();
  enh_cmd->add_option("--out", enh.out, "Stack BRF")->required();
  enh_cmd->add_option("--config", enh.config, "EnhanceConfig JSON");
  enh_cmd->add_option("--predictors", enh.predictors, "Regression predictor bands")->delimiter(',');
  enh_cmd->add_option("--p-lo", enh.p_lo, "Lower background percentile");
  enh_cmd->add_option("--p-hi", enh.p_hi, "Upper background percentile");
  enh_cmd->add_flag("--no-zscore", enh.no_zscore, "Skip per-channel z-score normalization");
  enh_cmd->add_option("--model", enh.model, "Regression model JSON output");
  enh_cmd->add_option("--ppm", enh.ppm, "PPM preview prefix");

  LabelArgs lab;
  auto* lab_cmd = app.add_subcommand("label", "Threshold, components, contours and source assignment");
  lab_cmd->add_option("--field", lab.field, "Field or stack BRF");
  lab_cmd->add_option("--threshold", lab.threshold, "Threshold value");
  lab_cmd->add_option("--direction", lab.direction, "below|above")->check(CLI::IsMember({"below", "above"}));
  lab_cmd->add_option("--channel", lab.channel, "Stack channel V|S")->check(CLI::IsMember({"V", "S"}));
  lab_cmd->add_option("--connectivity", lab.connectivity, "4 or 8")->check(CLI::IsMember({4, 8}));
  lab_cmd->add_option("--vents", lab.vents, "Vent list JSON [{name, xy, threshold?}]");
  lab_cmd->add_option("--override", lab.override_mask, "Operator-edited mask used instead of the threshold");
  lab_cmd->add_option("--contours", lab.contours, "Contour GeoJSON output");
  lab_cmd->add_option("--ppm", lab.ppm, "PPM preview of the labels");
  lab_cmd->add_option("--out", lab.out, "Label mask BRF")->required();

  DatasetArgs ds;
  auto* ds_cmd = app.add_subcommand("dataset", "Dataset tools");
  ds_cmd->require_subcommand(1);
  auto* build_cmd = ds_cmd->add_subcommand("build", "Build a tiled, split, augmented dataset");
  build_cmd->add_option("--config", ds.config, "DatasetConfig JSON")->required();
  build_cmd->add_option("--out", ds.out, "Output directory")->required();
  build_cmd->add_option("--seed", ds.seed, "Override the dataset seed");

  DetectArgs det;
  auto* det_cmd = app.add_subcommand("detect", "Robust-threshold baseline detector");
  det_cmd->add_option("--in", det.in, "Stack BRF")->required();
  det_cmd->add_option("--out", det.out, "Prediction mask BRF")->required();
  det_cmd->add_option("--config", det.config, "DetectorConfig JSON");
  det_cmd->add_option("--k", det.k, "Anomaly depth in robust std units");
  det_cmd->add_option("--channel", det.channel, "V, S or min(V,S)");
  det_cmd->add_option("--min-area", det.min_area, "Minimum component area in pixels");
  det_cmd->add_option("--connectivity", det.connectivity, "4 or 8");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score prediction masks against a manifest");
  ev_cmd->add_option("--manifest", ev.manifest, "Manifest JSON")->required();
  ev_cmd->add_option("--pred", ev.pred, "Directory of <sample id>.brf masks")->required();
  ev_cmd->add_option("--out", ev.out, "Report JSON")->required();
  ev_cmd->add_option("--split", ev.split, "val|train");

  DiffArgs dm;
  auto* dm_cmd = app.add_subcommand("diffmap", "TP/FP/FN/TN code mask");
  dm_cmd->add_option("--pred", dm.pred, "Prediction mask BRF")->required();
  dm_cmd->add_option("--gt", dm.gt, "Ground-truth mask BRF")->required();
  dm_cmd->add_option("--out", dm.out, "Code mask BRF")->required();
  dm_cmd->add_option("--ppm", dm.ppm, "Colour PPM output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    if (dynamic_cast<const CLI::CallForVersion*>(&e)) {
      out << kVersion << "\n";
    } else {
      out << app.help();
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*synth_cmd) run_synth(synth, out);
    else if (*enh_cmd) run_enhance(enh, out);
    else if (*lab_cmd) {
      if (lab.field.empty() && lab.override_mask.empty()) {
        err << "error: label needs --field or --override\n";
        return 1;
      }
      run_label(lab, out);
    } else if (*ds_cmd) run_dataset(ds, jobs, out);
    else if (*det_cmd) run_detect(det, out);
    else if (*ev_cmd) run_eval(ev, out);
    else if (*dm_cmd) run_diffmap(dm, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: bad configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace s2plume
