#include "s2plume/detect.hpp"

#include "s2plume/labeling.hpp"

namespace s2plume {

void validate(const DetectorConfig& cfg) {
  if (!(cfg.k_sigma > 0.0) || !std::isfinite(cfg.k_sigma)) {
    throw Error(Errc::invalid_argument, "k_sigma must be > 0");
  }
  if (cfg.min_area_px < 1) throw Error(Errc::invalid_argument, "min_area_px must be >= 1");
  if (cfg.connectivity != 4 && cfg.connectivity != 8) {
    throw Error(Errc::invalid_argument, "connectivity must be 4 or 8");
  }
}

DetectChannel parse_channel(const std::string& name) {
  if (name == "V") return DetectChannel::varon;
  if (name == "S") return DetectChannel::sanchez;
  if (name == "min(V,S)" || name == "VS" || name == "both") return DetectChannel::both;
  throw Error(Errc::invalid_argument, "unknown channel " + name + " (V, S or min(V,S))");
}

std::string to_string(DetectChannel channel) {
  switch (channel) {
    case DetectChannel::varon: return "V";
    case DetectChannel::sanchez: return "S";
    case DetectChannel::both: return "min(V,S)";
  }
  return "S";
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = {{"k_sigma", c.k_sigma},
       {"channel", to_string(c.channel)},
       {"min_area_px", c.min_area_px},
       {"connectivity", c.connectivity}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  c = DetectorConfig{};
  c.k_sigma = j.value("k_sigma", c.k_sigma);
  if (j.contains("channel")) c.channel = parse_channel(j.at("channel").get<std::string>());
  c.min_area_px = j.value("min_area_px", c.min_area_px);
  c.connectivity = j.value("connectivity", c.connectivity);
}

namespace {

Mask anomalies(const Field& channel, double k_sigma, RobustStats& stats, bool& zero_mad) {
  stats = robust_stats(channel);
  if (stats.mad == 0.0) {
    zero_mad = true;
    return Mask::Zero(channel.rows(), channel.cols());
  }
  const double cut = stats.median - k_sigma * stats.robust_std;
  return (channel.cast<double>() < cut).cast<std::uint8_t>();
}

}  // namespace

Detection detect_plumes(const FeatureStack& stack, const DetectorConfig& cfg) {
  validate(cfg);
  validate(stack);
  Detection out;
  Mask candidates;
  switch (cfg.channel) {
    case DetectChannel::varon:
      candidates = anomalies(stack.varon(), cfg.k_sigma, out.varon_stats, out.zero_mad);
      break;
    case DetectChannel::sanchez:
      candidates = anomalies(stack.sanchez(), cfg.k_sigma, out.sanchez_stats, out.zero_mad);
      break;
    case DetectChannel::both:
      candidates = anomalies(stack.varon(), cfg.k_sigma, out.varon_stats, out.zero_mad) *
                   anomalies(stack.sanchez(), cfg.k_sigma, out.sanchez_stats, out.zero_mad);
      break;
  }
  out.mask = Mask::Zero(stack.height(), stack.width());
  if (out.zero_mad) return out;
  for (const auto& comp : connected_components(candidates, cfg.connectivity)) {
    if (comp.area_px < cfg.min_area_px) continue;
    for (const auto& p : comp.pixels) out.mask(p.y, p.x) = 1;
  }
  return out;
}

}  // namespace s2plume
