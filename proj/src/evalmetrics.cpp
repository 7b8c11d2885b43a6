#include "s2plume/evalmetrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "s2plume/brf.hpp"

namespace s2plume {

Confusion confusion(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "confusion");
  Confusion c;
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    for (Eigen::Index col = 0; col < pred.cols(); ++col) {
      const bool p = pred(r, col) != 0;
      const bool g = gt(r, col) != 0;
      if (p && g) ++c.tp;
      else if (p) ++c.fp;
      else if (g) ++c.fn;
      else ++c.tn;
    }
  return c;
}

double dice_f1(const Confusion& c) {
  const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double iou(const Confusion& c) {
  const std::uint64_t denom = c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

void validate(const LossConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw Error(Errc::invalid_argument, "alpha must be in (0, 1]");
  if (!(cfg.gamma >= 0.0)) throw Error(Errc::invalid_argument, "gamma must be >= 0");
  if (!(cfg.lambda_focal >= 0.0) || !(cfg.lambda_dice >= 0.0)) {
    throw Error(Errc::invalid_argument, "loss weights must be >= 0");
  }
  if (!(cfg.lambda_focal + cfg.lambda_dice > 0.0)) {
    throw Error(Errc::invalid_argument, "lambda_focal + lambda_dice must be > 0");
  }
  if (!(cfg.dice_eps > 0.0)) throw Error(Errc::invalid_argument, "dice_eps must be > 0");
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"alpha", c.alpha},
       {"gamma", c.gamma},
       {"lambda_focal", c.lambda_focal},
       {"lambda_dice", c.lambda_dice},
       {"dice_eps", c.dice_eps}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  c.alpha = j.value("alpha", c.alpha);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda_focal = j.value("lambda_focal", c.lambda_focal);
  c.lambda_dice = j.value("lambda_dice", c.lambda_dice);
  c.dice_eps = j.value("dice_eps", c.dice_eps);
}

namespace {

void check_probs(const Field& probs, const Mask& gt, const char* what) {
  require_same_shape(probs, gt, what);
  if (probs.size() == 0) throw Error(Errc::empty_input, std::string(what) + " on an empty raster");
  if (!(probs >= 0.0f && probs <= 1.0f).all()) {
    throw Error(Errc::invalid_argument, std::string(what) + " needs probabilities in [0, 1]");
  }
}

}  // namespace

double focal_loss(const Field& probs, const Mask& gt, const LossConfig& cfg) {
  check_probs(probs, gt, "focal_loss");
  double sum = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = std::clamp(static_cast<double>(probs(r, c)), kProbClamp, 1.0 - kProbClamp);
      const double pt = gt(r, c) != 0 ? p : 1.0 - p;
      sum += -cfg.alpha * std::pow(1.0 - pt, cfg.gamma) * std::log(pt);
    }
  return sum / static_cast<double>(probs.size());
}

double dice_loss(const Field& probs, const Mask& gt, double eps) {
  check_probs(probs, gt, "dice_loss");
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(r, c);
      const double g = gt(r, c) != 0 ? 1.0 : 0.0;
      inter += p * g;
      sum_p += p;
      sum_g += g;
    }
  return 1.0 - (2.0 * inter + eps) / (sum_p + sum_g + eps);
}

double combined_loss(const Field& probs, const Mask& gt, const LossConfig& cfg) {
  validate(cfg);
  return cfg.lambda_focal * focal_loss(probs, gt, cfg) + cfg.lambda_dice * dice_loss(probs, gt, cfg.dice_eps);
}

Mask difference_map(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "difference_map");
  Mask out(pred.rows(), pred.cols());
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const bool p = pred(r, c) != 0;
      const bool g = gt(r, c) != 0;
      out(r, c) = p ? (g ? kTruePositive : kFalsePositive) : (g ? kFalseNegative : kTrueNegative);
    }
  return out;
}

EvalReport make_report(std::vector<SampleScore> samples) {
  if (samples.empty()) throw Error(Errc::empty_input, "no samples to evaluate");
  EvalReport r;
  for (auto& s : samples) {
    s.dice = dice_f1(s.counts);
    s.iou = iou(s.counts);
    r.micro_counts += s.counts;
    r.macro_dice += s.dice;
    r.macro_iou += s.iou;
  }
  const auto n = static_cast<double>(samples.size());
  r.macro_dice /= n;
  r.macro_iou /= n;
  r.micro_dice = dice_f1(r.micro_counts);
  r.micro_iou = iou(r.micro_counts);
  r.samples = std::move(samples);
  return r;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"id", s.id},
                       {"dice", s.dice},
                       {"iou", s.iou},
                       {"tp", s.counts.tp},
                       {"fp", s.counts.fp},
                       {"fn", s.counts.fn},
                       {"tn", s.counts.tn}});
  }
  const auto& m = r.micro_counts;
  j = {{"samples", samples},
       {"micro",
        {{"dice", r.micro_dice}, {"iou", r.micro_iou}, {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}}},
       {"macro", {{"dice", r.macro_dice}, {"iou", r.macro_iou}}},
       {"count", r.samples.size()}};
}

std::string format_table(const EvalReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-32s %8s %8s %10s %10s %10s %10s\n", "sample", "dice", "iou", "tp",
                "fp", "fn", "tn");
  out << line;
  for (const auto& s : r.samples) {
    std::snprintf(line, sizeof line, "%-32s %8.4f %8.4f %10llu %10llu %10llu %10llu\n", s.id.c_str(), s.dice,
                  s.iou, static_cast<unsigned long long>(s.counts.tp),
                  static_cast<unsigned long long>(s.counts.fp), static_cast<unsigned long long>(s.counts.fn),
                  static_cast<unsigned long long>(s.counts.tn));
    out << line;
  }
  std::snprintf(line, sizeof line, "\nmicro  dice %.4f  iou %.4f\nmacro  dice %.4f  iou %.4f  (n=%zu)\n",
                r.micro_dice, r.micro_iou, r.macro_dice, r.macro_iou, r.samples.size());
  out << line;
  return out.str();
}

EvalReport evaluate_manifest(const Manifest& manifest, const std::filesystem::path& predictions_dir,
                             Split split) {
  std::vector<const SampleRecord*> records;
  for (const auto& s : manifest.samples)
    if (s.split == split) records.push_back(&s);
  if (records.empty()) throw Error(Errc::empty_input, "manifest has no samples in the requested split");

  std::vector<std::string> missing;
  for (const auto* rec : records) {
    if (!std::filesystem::exists(predictions_dir / (rec->id + ".brf"))) missing.push_back(rec->id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(Errc::missing_prediction, std::to_string(missing.size()) + " missing: " + list);
  }

  std::vector<SampleScore> scores;
  for (const auto* rec : records) {
    const Mask gt = read_mask(manifest.base_dir / rec->mask_path);
    const Mask pred = read_mask(predictions_dir / (rec->id + ".brf"));
    scores.push_back({rec->id, confusion(pred, gt), 0.0, 0.0});
  }
  return make_report(std::move(scores));
}

}  // namespace s2plume
