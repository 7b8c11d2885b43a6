#include "s2plume/labeling.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace s2plume {

Mask mask_from_threshold(const Field& field, double threshold, Direction direction) {
  const Raster<double> x = field.cast<double>();
  if (direction == Direction::below) return (x < threshold).cast<std::uint8_t>();
  return (x > threshold).cast<std::uint8_t>();
}

std::size_t nearest_vent(double x, double y, const std::vector<Vent>& vents) {
  if (vents.empty()) throw Error(Errc::invalid_argument, "need at least one vent");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vents.size(); ++i) {
    const double dx = x - vents[i].x;
    const double dy = y - vents[i].y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

Mask mask_from_vent_thresholds(const Field& field, const std::vector<Vent>& vents, double fallback,
                               Direction direction) {
  Mask out(field.rows(), field.cols());
  for (Eigen::Index y = 0; y < field.rows(); ++y)
    for (Eigen::Index x = 0; x < field.cols(); ++x) {
      const Vent& v = vents[nearest_vent(static_cast<double>(x), static_cast<double>(y), vents)];
      const double t = v.threshold.value_or(fallback);
      const double value = field(y, x);
      out(y, x) = direction == Direction::below ? value < t : value > t;
    }
  return out;
}

std::vector<Component> connected_components(const Mask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) {
    throw Error(Errc::invalid_argument, "connectivity must be 4 or 8");
  }
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  Raster<int> label = Raster<int>::Zero(h, w);
  std::vector<Component> out;
  std::deque<Pixel> queue;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(y, x) == 0 || label(y, x) != 0) continue;
      Component comp;
      comp.id = static_cast<int>(out.size()) + 1;
      label(y, x) = comp.id;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        comp.pixels.push_back(p);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (mask(ny, nx) == 0 || label(ny, nx) != 0) continue;
            label(ny, nx) = comp.id;
            queue.push_back({nx, ny});
          }
      }
      std::sort(comp.pixels.begin(), comp.pixels.end(),
                [](const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
      comp.area_px = static_cast<int>(comp.pixels.size());
      comp.x0 = comp.x1 = comp.pixels.front().x;
      comp.y0 = comp.y1 = comp.pixels.front().y;
      double sx = 0.0, sy = 0.0;
      for (const auto& p : comp.pixels) {
        comp.x0 = std::min(comp.x0, p.x);
        comp.x1 = std::max(comp.x1, p.x);
        comp.y0 = std::min(comp.y0, p.y);
        comp.y1 = std::max(comp.y1, p.y);
        sx += p.x;
        sy += p.y;
      }
      comp.centroid_x = sx / comp.area_px;
      comp.centroid_y = sy / comp.area_px;
      out.push_back(std::move(comp));
    }
  }
  return out;
}

namespace {

// Directions in y-down image coordinates, ordered clockwise on screen.
constexpr int kDx[4] = {1, 0, -1, 0};  // E, S, W, N
constexpr int kDy[4] = {0, 1, 0, -1};

// Pixels ahead of vertex (vx, vy) when leaving it in direction d: the one on
// the right-hand side and the one on the left-hand side.
Pixel ahead_right(int vx, int vy, int d) {
  switch (d) {
    case 0: return {vx, vy};
    case 1: return {vx - 1, vy};
    case 2: return {vx - 1, vy - 1};
    default: return {vx, vy - 1};
  }
}

Pixel ahead_left(int vx, int vy, int d) {
  switch (d) {
    case 0: return {vx, vy - 1};
    case 1: return {vx, vy};
    case 2: return {vx - 1, vy};
    default: return {vx - 1, vy - 1};
  }
}

}  // namespace

std::vector<Contour> extract_contours(const Mask& mask) {
  const auto components = connected_components(mask, 4);
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  Raster<int> label = Raster<int>::Zero(h, w);
  for (const auto& comp : components)
    for (const auto& p : comp.pixels) label(p.y, p.x) = comp.id;

  std::vector<Contour> out;
  for (const auto& comp : components) {
    auto inside = [&](Pixel p) {
      return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h && label(p.y, p.x) == comp.id;
    };
    // The top-left corner of the first pixel in raster order touches no other
    // pixel of the component, so it is a corner visited exactly once.
    const Pixel start = comp.pixels.front();
    int vx = start.x, vy = start.y, d = 0;
    std::vector<std::pair<int, int>> path{{vx, vy}};
    do {
      vx += kDx[d];
      vy += kDy[d];
      int next = d;
      if (!inside(ahead_right(vx, vy, d))) {
        next = (d + 1) % 4;
      } else if (inside(ahead_left(vx, vy, d))) {
        next = (d + 3) % 4;
      }
      if (next != d || (vx == start.x && vy == start.y)) path.emplace_back(vx, vy);
      d = next;
    } while (!(vx == start.x && vy == start.y && d == 0));

    out.push_back(Contour{comp.id, std::move(path)});
  }
  return out;
}

double shoelace_area(const Contour& contour) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < contour.vertices.size(); ++i) {
    const auto [x0, y0] = contour.vertices[i];
    const auto [x1, y1] = contour.vertices[i + 1];
    twice += static_cast<double>(x0) * y1 - static_cast<double>(x1) * y0;
  }
  return std::abs(twice) / 2.0;
}

double perimeter(const Contour& contour) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < contour.vertices.size(); ++i) {
    const auto [x0, y0] = contour.vertices[i];
    const auto [x1, y1] = contour.vertices[i + 1];
    total += std::hypot(x1 - x0, y1 - y0);
  }
  return total;
}

Mask assign_sources(const std::vector<Component>& components, const std::vector<Vent>& vents,
                    int width, int height) {
  if (vents.empty()) throw Error(Errc::invalid_argument, "need at least one vent");
  if (vents.size() > 255) throw Error(Errc::invalid_argument, "at most 255 vents");
  Mask out = Mask::Zero(height, width);
  for (const auto& comp : components) {
    const std::size_t best = nearest_vent(comp.centroid_x, comp.centroid_y, vents);
    for (const auto& p : comp.pixels) {
      if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
        throw Error(Errc::shape_mismatch, "component pixel outside output mask");
      }
      out(p.y, p.x) = static_cast<std::uint8_t>(best + 1);
    }
  }
  return out;
}

nlohmann::json contours_to_geojson(const std::vector<Contour>& contours) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& c : contours) {
    nlohmann::json ring = nlohmann::json::array();
    for (const auto& [x, y] : c.vertices) ring.push_back({x, y});
    features.push_back({{"type", "Feature"},
                        {"properties", {{"component_id", c.component_id}, {"area_px", shoelace_area(c)}}},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}});
  }
  return {{"type", "FeatureCollection"}, {"crs", "pixel"}, {"features", features}};
}

void to_json(nlohmann::json& j, const Vent& v) {
  j = {{"name", v.name}, {"xy", {v.x, v.y}}};
  if (v.threshold) j["threshold"] = *v.threshold;
}

void from_json(const nlohmann::json& j, Vent& v) {
  v.name = j.value("name", std::string{});
  const auto& xy = j.at("xy");
  v.x = xy.at(0).get<double>();
  v.y = xy.at(1).get<double>();
  v.threshold.reset();
  if (j.contains("threshold")) v.threshold = j.at("threshold").get<double>();
}

}  // namespace s2plume
