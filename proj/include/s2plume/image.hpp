#pragma once

#include <filesystem>
#include <vector>

#include "s2plume/raster.hpp"

namespace s2plume {

enum class Colormap { grayscale, diffmap };

// Binary PPM (P6, maxval 255).
//
// grayscale: linear rescale of [min, max] to [0, 255]; a constant raster is
// mid-gray 128. diffmap: codes TN=0 black, TP=1 green, FP=2 red, FN=3 yellow.
void export_image(const Field& field, const std::filesystem::path& path,
                  Colormap colormap = Colormap::grayscale);
void export_image(const Mask& mask, const std::filesystem::path& path,
                  Colormap colormap = Colormap::grayscale);

// RGB bytes, row-major, 3 per pixel. The file writer wraps these.
std::vector<std::uint8_t> render_rgb(const Field& field, Colormap colormap);
std::vector<std::uint8_t> render_rgb(const Mask& mask, Colormap colormap);

}  // namespace s2plume
