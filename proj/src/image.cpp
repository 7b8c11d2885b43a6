#include "s2plume/image.hpp"

#include <cmath>
#include <fstream>

namespace s2plume {
namespace {

template <typename Scalar>
std::vector<std::uint8_t> grayscale(const Raster<Scalar>& x) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(static_cast<std::size_t>(x.size()) * 3);
  const double lo = static_cast<double>(x.minCoeff());
  const double hi = static_cast<double>(x.maxCoeff());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      std::uint8_t g = 128;
      if (hi > lo) {
        g = static_cast<std::uint8_t>(
            std::lround((static_cast<double>(x(r, c)) - lo) / (hi - lo) * 255.0));
      }
      rgb.insert(rgb.end(), {g, g, g});
    }
  }
  return rgb;
}

void write_ppm(const std::vector<std::uint8_t>& rgb, Eigen::Index width, Eigen::Index height,
               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> render_rgb(const Field& field, Colormap colormap) {
  if (colormap == Colormap::diffmap) {
    throw Error(Errc::invalid_argument, "diffmap colormap needs a code mask, not a field");
  }
  if (field.size() == 0 || !field.isFinite().all()) {
    throw Error(Errc::invariant, "cannot render an empty or non-finite field");
  }
  return grayscale(field);
}

std::vector<std::uint8_t> render_rgb(const Mask& mask, Colormap colormap) {
  if (mask.size() == 0) throw Error(Errc::invariant, "cannot render an empty mask");
  if (colormap == Colormap::grayscale) return grayscale(mask);

  static constexpr std::uint8_t palette[4][3] = {
      {0, 0, 0},      // TN
      {0, 255, 0},    // TP
      {255, 0, 0},    // FP
      {255, 255, 0},  // FN
  };
  if ((mask > 3).any()) {
    throw Error(Errc::invalid_argument, "diffmap colormap needs codes in {0,1,2,3}");
  }
  std::vector<std::uint8_t> rgb;
  rgb.reserve(static_cast<std::size_t>(mask.size()) * 3);
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      const auto* p = palette[mask(r, c)];
      rgb.insert(rgb.end(), p, p + 3);
    }
  return rgb;
}

void export_image(const Field& field, const std::filesystem::path& path, Colormap colormap) {
  write_ppm(render_rgb(field, colormap), field.cols(), field.rows(), path);
}

void export_image(const Mask& mask, const std::filesystem::path& path, Colormap colormap) {
  write_ppm(render_rgb(mask, colormap), mask.cols(), mask.rows(), path);
}

}  // namespace s2plume
