#include <doctest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "s2plume/brf.hpp"
#include "s2plume/cli.hpp"
#include "s2plume/dataset.hpp"

using namespace s2plume;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string p(const fs::path& path) { return path.string(); }

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli({"--version"}).code == 0);
  CHECK(cli({"--version"}).out == std::string(kVersion) + "\n");
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"synth"}).code == 1);
  CHECK(cli({"detect", "--in", "x.brf"}).code == 1);
  const auto dir = oracle::temp_dir("cli_codes");
  const Run missing = cli({"detect", "--in", p(dir / "absent.brf"), "--out", p(dir / "o.brf")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("error") != std::string::npos);
  write_text(dir / "bad.json", "{not json");
  CHECK(cli({"synth", "--config", p(dir / "bad.json"), "--out", p(dir / "s")}).code == 2);
  CHECK(cli({"label", "--out", p(dir / "l.brf")}).code == 1);
}

TEST_CASE("synth is deterministic") {
  const auto dir = oracle::temp_dir("cli_synth");
  write_text(dir / "cfg.json", R"({"width": 40, "height": 36, "noise": {"gaussian_sigma": 0.5, "artifact_count": 2,
    "artifact_amplitude": 3}, "plumes": [{"center_xy": [20, 18], "sigma_px": 3, "peak_enhancement": 1,
    "absorption_kappa": 0.2, "label_threshold": 0.3, "source_id": 1}]})");
  for (const char* name : {"a", "b"}) {
    REQUIRE(cli({"synth", "--config", p(dir / "cfg.json"), "--out", p(dir / name), "--seed", "17", "--ppm"}).code == 0);
  }
  for (const char* f : {"scene.brf", "mask.brf", "config.json"}) {
    CHECK(oracle::slurp(dir / "a" / f) == oracle::slurp(dir / "b" / f));
  }
  CHECK(fs::exists(dir / "a" / "run.json"));
  const Scene s = read_scene(dir / "a" / "scene.brf");
  CHECK(s.width == 40);
  CHECK(s.height == 36);
  CHECK((read_mask(dir / "a" / "mask.brf") != 0).any());
  const auto run = nlohmann::json::parse(oracle::slurp(dir / "a" / "run.json"));
  CHECK(run["subcommand"] == "synth");
  CHECK(run["version"] == kVersion);
  CHECK(run.contains("duration_s"));
  CHECK(run["seed"] == 17);
  REQUIRE(cli({"synth", "--config", p(dir / "cfg.json"), "--out", p(dir / "c"), "--seed", "18"}).code == 0);
  CHECK(oracle::slurp(dir / "a" / "scene.brf") != oracle::slurp(dir / "c" / "scene.brf"));
}

TEST_CASE("enhance without B12 fails with a runtime error") {
  const auto dir = oracle::temp_dir("cli_enhance_missing");
  Scene s;
  s.width = 4;
  s.height = 4;
  s.bands["B11"] = Field::Constant(4, 4, 1.0f);
  write_brf(s, dir / "scene.brf");
  const Run r = cli({"enhance", "--scene", p(dir / "scene.brf"), "--out", p(dir / "stack.brf")});
  CHECK(r.code == 2);
  CHECK(r.err.find("B12") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "stack.brf"));
}

TEST_CASE("synth, enhance, label, detect, diffmap and eval chain") {
  const auto dir = oracle::temp_dir("cli_chain");
  write_text(dir / "cfg.json", R"({"width": 48, "height": 48, "noise": {"gaussian_sigma": 0.3},
    "plumes": [{"center_xy": [24, 24], "sigma_px": 4, "peak_enhancement": 1, "absorption_kappa": 0.3,
    "label_threshold": 0.3, "source_id": 1}]})");
  REQUIRE(cli({"synth", "--config", p(dir / "cfg.json"), "--out", p(dir / "scene"), "--seed", "3"}).code == 0);
  const Run enh = cli({"enhance", "--scene", p(dir / "scene" / "scene.brf"), "--out", p(dir / "stack.brf"),
                       "--ppm", p(dir / "stack")});
  REQUIRE(enh.code == 0);
  CHECK(fs::exists(dir / "stack.model.json"));
  CHECK(fs::exists(dir / "stack.run.json"));
  const FeatureStack st = read_stack(dir / "stack.brf");
  CHECK(st.normalization.has_value());

  write_text(dir / "vents.json", R"([{"name": "far", "xy": [0, 0]}, {"name": "near", "xy": [25, 25]}])");
  REQUIRE(cli({"label", "--field", p(dir / "stack.brf"), "--threshold", "-3", "--vents", p(dir / "vents.json"),
               "--out", p(dir / "labels.brf")})
              .code == 0);
  const Mask labels = read_mask(dir / "labels.brf");
  CHECK((labels == 2).any());
  CHECK_FALSE((labels == 1).any());
  const auto geo = nlohmann::json::parse(oracle::slurp(dir / "labels.contours.json"));
  CHECK(geo["features"].size() >= 1);

  // A strict threshold on the vent near the plume suppresses it.
  write_text(dir / "vents_strict.json", R"([{"name": "far", "xy": [0, 0]}, {"name": "near", "xy": [25, 25],
    "threshold": -1000}])");
  REQUIRE(cli({"label", "--field", p(dir / "stack.brf"), "--threshold", "-3", "--vents",
               p(dir / "vents_strict.json"), "--out", p(dir / "strict.brf")})
              .code == 0);
  CHECK_FALSE((read_mask(dir / "strict.brf") == 2).any());

  REQUIRE(cli({"detect", "--in", p(dir / "stack.brf"), "--out", p(dir / "pred" / "scene_0.brf"), "--k", "4"}).code ==
          0);
  const Mask pred = read_mask(dir / "pred" / "scene_0.brf");
  CHECK((pred != 0).any());

  REQUIRE(cli({"diffmap", "--pred", p(dir / "pred" / "scene_0.brf"), "--gt", p(dir / "scene" / "mask.brf"),
               "--out", p(dir / "diff.brf"), "--ppm", p(dir / "diff.ppm")})
              .code == 0);
  CHECK((read_mask(dir / "diff.brf") <= 3).all());
  CHECK(oracle::slurp(dir / "diff.ppm").substr(0, 2) == "P6");

  Manifest m;
  m.dataset_id = "chain";
  SampleRecord r;
  r.id = "scene_0";
  r.split = Split::val;
  r.mask_path = "scene/mask.brf";
  r.has_plume = true;
  m.samples.push_back(r);
  save_manifest(m, dir / "manifest.json");
  const Run ev = cli({"eval", "--manifest", p(dir / "manifest.json"), "--pred", p(dir / "pred"), "--out",
                      p(dir / "report" / "report.json")});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("micro dice") != std::string::npos);
  const auto report = nlohmann::json::parse(oracle::slurp(dir / "report" / "report.json"));
  CHECK(report["count"] == 1);
  CHECK(report["micro"]["dice"].get<double>() > 0.5);
  CHECK(fs::exists(dir / "report" / "report.txt"));

  fs::remove(dir / "pred" / "scene_0.brf");
  const Run missing = cli({"eval", "--manifest", p(dir / "manifest.json"), "--pred", p(dir / "pred"), "--out",
                           p(dir / "report2.json")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("scene_0") != std::string::npos);
}

TEST_CASE("dataset build through the command line") {
  const auto dir = oracle::temp_dir("cli_dataset");
  write_text(dir / "ds.json", R"({"dataset_id": "tiny", "scene_count": 2, "scene": {"width": 32, "height": 32},
    "tile_px": 16, "stride_px": 16, "val_fraction": 0.25})");
  for (const char* jobs : {"1", "2"}) {
    const Run r = cli({"--jobs", jobs, "dataset", "build", "--config", p(dir / "ds.json"), "--out",
                       p(dir / (std::string("out") + jobs)), "--seed", "11"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("samples") != std::string::npos);
  }
  CHECK(oracle::slurp(dir / "out1" / "manifest.json") == oracle::slurp(dir / "out2" / "manifest.json"));
  const Manifest m = load_manifest(dir / "out1" / "manifest.json");
  CHECK(m.dataset_id == "tiny");
  CHECK(m.seed == 11);
  CHECK(fs::exists(dir / "out1" / m.samples.front().stack_path));
}
