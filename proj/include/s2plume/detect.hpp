#pragma once

#include "s2plume/raster.hpp"
#include "s2plume/stats.hpp"

namespace s2plume {

enum class DetectChannel { varon, sanchez, both };

struct DetectorConfig {
  double k_sigma = 4.0;
  DetectChannel channel = DetectChannel::sanchez;
  int min_area_px = 1;
  int connectivity = 8;
};

void validate(const DetectorConfig& cfg);
DetectChannel parse_channel(const std::string& name);  // "V", "S", "min(V,S)"
std::string to_string(DetectChannel channel);

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

struct Detection {
  Mask mask;                 // binary
  RobustStats varon_stats;   // filled for the channels that were examined
  RobustStats sanchez_stats;
  bool zero_mad = false;     // a selected channel had MAD 0; the mask is empty
};

// Flags pixels below median - k_sigma * 1.4826 * MAD of the selected channel
// (both channels must flag for DetectChannel::both), then drops components
// smaller than min_area_px.
Detection detect_plumes(const FeatureStack& stack, const DetectorConfig& cfg);

}  // namespace s2plume
