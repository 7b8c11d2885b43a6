#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2plume/dataset.hpp"
#include "s2plume/raster.hpp"

namespace s2plume {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const Confusion&) const = default;
};

// Both masks are binarized (nonzero -> 1).
Confusion confusion(const Mask& pred, const Mask& gt);

// 2tp / (2tp + fp + fn) and tp / (tp + fp + fn). With no positives in either
// mask (tp = fp = fn = 0) both scores are 1.
double dice_f1(const Confusion& c);
double iou(const Confusion& c);

struct LossConfig {
  double alpha = 0.25;
  double gamma = 2.0;
  double lambda_focal = 1.0;
  double lambda_dice = 1.0;
  double dice_eps = 1.0;
};

inline constexpr double kProbClamp = 1e-7;

void validate(const LossConfig& cfg);
void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

// Mean over pixels of -alpha (1 - p_t)^gamma ln(p_t), p clamped to
// [kProbClamp, 1 - kProbClamp]. alpha weights every pixel.
double focal_loss(const Field& probs, const Mask& gt, const LossConfig& cfg);

// 1 - (2 sum(p g) + eps) / (sum p + sum g + eps)
double dice_loss(const Field& probs, const Mask& gt, double eps);

double combined_loss(const Field& probs, const Mask& gt, const LossConfig& cfg);

enum DiffCode : std::uint8_t { kTrueNegative = 0, kTruePositive = 1, kFalsePositive = 2, kFalseNegative = 3 };

Mask difference_map(const Mask& pred, const Mask& gt);

struct SampleScore {
  std::string id;
  Confusion counts;
  double dice = 0.0;
  double iou = 0.0;
};

struct EvalReport {
  std::vector<SampleScore> samples;
  Confusion micro_counts;
  double micro_dice = 0.0;
  double micro_iou = 0.0;
  double macro_dice = 0.0;
  double macro_iou = 0.0;
};

EvalReport make_report(std::vector<SampleScore> samples);

void to_json(nlohmann::json& j, const EvalReport& r);
std::string format_table(const EvalReport& r);

// Scores every sample of the chosen split against <predictions_dir>/<id>.brf
// (a u8 mask). Missing predictions are all listed in one error.
EvalReport evaluate_manifest(const Manifest& manifest, const std::filesystem::path& predictions_dir,
                             Split split = Split::val);

}  // namespace s2plume
