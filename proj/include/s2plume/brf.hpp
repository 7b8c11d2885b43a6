#pragma once

#include <filesystem>
#include <variant>

#include "s2plume/raster.hpp"

namespace s2plume {

// BRF: one UTF-8 JSON header line terminated by '\n', then a band-sequential,
// row-major, little-endian payload (f32 for scenes/fields/stacks, u8 for masks).
//
// Header keys: magic ("BRF1"), kind, dtype, width, height, bands (scene and
// stack only), pixel_size_m, meta.
//
// kind "stack" holds a FeatureStack: bands ["V","S","V"], with the applied
// z-score statistics (if any) under meta.normalization.

using BrfObject = std::variant<Scene, Field, Mask, FeatureStack>;

void write_brf(const Scene& scene, const std::filesystem::path& path);
void write_brf(const Field& field, const std::filesystem::path& path);
void write_brf(const Mask& mask, const std::filesystem::path& path);
void write_brf(const FeatureStack& stack, const std::filesystem::path& path);

BrfObject read_brf(const std::filesystem::path& path);

// Typed readers; throw Errc::invalid_argument when the file holds another kind.
Scene read_scene(const std::filesystem::path& path);
Field read_field(const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);
FeatureStack read_stack(const std::filesystem::path& path);

// In-memory codec used by the file functions.
std::string encode_brf(const BrfObject& object);
BrfObject decode_brf(const std::string& bytes);

}  // namespace s2plume
