#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "s2plume/error.hpp"

namespace s2plume {

// Row-major 2-D raster: rows() is the height, cols() the width. Pixel (x, y)
// lives at (y, x).
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Field = Raster<float>;
using Mask = Raster<std::uint8_t>;

using BandId = std::string;

struct Scene {
  int width = 0;
  int height = 0;
  double pixel_size_m = 20.0;
  std::map<BandId, Field> bands;
  // Pass-through metadata (units, provenance). Not interpreted.
  nlohmann::json meta = nlohmann::json::object();

  bool has(const BandId& id) const { return bands.count(id) != 0; }

  const Field& band(const BandId& id) const {
    auto it = bands.find(id);
    if (it == bands.end()) throw Error(Errc::missing_band, "scene has no band " + id);
    return it->second;
  }

  Field& band(const BandId& id) {
    auto it = bands.find(id);
    if (it == bands.end()) throw Error(Errc::missing_band, "scene has no band " + id);
    return it->second;
  }

  bool operator==(const Scene& other) const;
};

struct ChannelStats {
  double mean = 0.0;
  double std = 1.0;
  bool operator==(const ChannelStats&) const = default;
};

// Three-channel [V, S, V] feature stack.
struct FeatureStack {
  std::array<Field, 3> channels;
  std::optional<std::array<ChannelStats, 3>> normalization;

  int width() const { return static_cast<int>(channels[0].cols()); }
  int height() const { return static_cast<int>(channels[0].rows()); }

  const Field& varon() const { return channels[0]; }
  const Field& sanchez() const { return channels[1]; }

  bool operator==(const FeatureStack& other) const;
};

template <typename A, typename B>
bool same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename A, typename B>
void require_same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b,
                        const char* what) {
  if (!same_shape(a, b)) {
    throw Error(Errc::shape_mismatch,
                std::string(what) + ": " + std::to_string(a.cols()) + "x" +
                    std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
                    std::to_string(b.rows()));
  }
}

// Bitwise equality, so NaN payloads and signed zeros compare exactly.
template <typename Scalar>
bool bit_equal(const Raster<Scalar>& a, const Raster<Scalar>& b) {
  if (!same_shape(a, b)) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.data(), b.data(), sizeof(Scalar) * static_cast<std::size_t>(a.size())) == 0;
}

// Throws Errc::invariant when the scene is malformed.
void validate(const Scene& scene);
void validate(const FeatureStack& stack);

inline bool Scene::operator==(const Scene& other) const {
  if (width != other.width || height != other.height || pixel_size_m != other.pixel_size_m ||
      meta != other.meta || bands.size() != other.bands.size()) {
    return false;
  }
  for (const auto& [id, field] : bands) {
    auto it = other.bands.find(id);
    if (it == other.bands.end() || !bit_equal(field, it->second)) return false;
  }
  return true;
}

inline bool FeatureStack::operator==(const FeatureStack& other) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (!bit_equal(channels[i], other.channels[i])) return false;
  }
  return normalization == other.normalization;
}

inline void validate(const Scene& scene) {
  if (scene.width <= 0 || scene.height <= 0) {
    throw Error(Errc::invariant, "scene dimensions must be positive");
  }
  if (!(scene.pixel_size_m > 0.0) || !std::isfinite(scene.pixel_size_m)) {
    throw Error(Errc::invariant, "pixel_size_m must be finite and positive");
  }
  if (scene.bands.empty()) throw Error(Errc::invariant, "scene has no bands");
  for (const auto& [id, field] : scene.bands) {
    if (id.empty()) throw Error(Errc::invariant, "empty band id");
    if (field.cols() != scene.width || field.rows() != scene.height) {
      throw Error(Errc::invariant, "band " + id + " does not match scene dimensions");
    }
    if (!field.isFinite().all()) throw Error(Errc::invariant, "band " + id + " has non-finite values");
    if ((field < 0.0f).any()) throw Error(Errc::invariant, "band " + id + " has negative radiance");
  }
}

inline void validate(const FeatureStack& stack) {
  for (const auto& ch : stack.channels) {
    require_same_shape(ch, stack.channels[0], "feature stack channels");
    if (!ch.isFinite().all()) throw Error(Errc::invariant, "feature stack has non-finite values");
  }
  if (stack.channels[0].size() == 0) throw Error(Errc::invariant, "empty feature stack");
}

}  // namespace s2plume
