#pragma once

#include <optional>
#include <string>
#include <vector>

#include "s2plume/raster.hpp"

namespace s2plume {

enum class Direction { below, above };

struct Pixel {
  int x = 0;
  int y = 0;
  bool operator==(const Pixel&) const = default;
};

struct Component {
  int id = 0;
  std::vector<Pixel> pixels;  // raster order
  int area_px = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounding box
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

// Polygon on pixel corners: pixel (x, y) covers [x, x+1] x [y, y+1].
// Closed: the last vertex repeats the first. Only corner vertices are kept.
struct Contour {
  int component_id = 0;
  std::vector<std::pair<int, int>> vertices;
};

struct Vent {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> threshold;  // site-specific threshold for this source
};

// Pixels strictly below (or above) the threshold get 1.
Mask mask_from_threshold(const Field& field, double threshold, Direction direction);

// Each pixel is compared against the threshold of its nearest vent (ties go
// to the lower index); vents without their own threshold use fallback.
Mask mask_from_vent_thresholds(const Field& field, const std::vector<Vent>& vents, double fallback,
                               Direction direction);

// Index of the vent nearest to (x, y); ties go to the lower index.
std::size_t nearest_vent(double x, double y, const std::vector<Vent>& vents);

// Foreground is any nonzero pixel. Ids 1..N follow the raster order of each
// component's first pixel.
std::vector<Component> connected_components(const Mask& mask, int connectivity = 8);

// One outer boundary per 4-connected component, traced along pixel edges
// with the foreground on the right (clockwise on screen).
std::vector<Contour> extract_contours(const Mask& mask);

double shoelace_area(const Contour& contour);
double perimeter(const Contour& contour);

// Each component takes the 1-based index of the vent nearest its centroid;
// ties go to the lower index.
Mask assign_sources(const std::vector<Component>& components, const std::vector<Vent>& vents,
                    int width, int height);

// GeoJSON-style FeatureCollection of polygons in pixel coordinates.
nlohmann::json contours_to_geojson(const std::vector<Contour>& contours);

void to_json(nlohmann::json& j, const Vent& v);
void from_json(const nlohmann::json& j, Vent& v);

}  // namespace s2plume
