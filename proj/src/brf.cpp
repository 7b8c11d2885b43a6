#include "s2plume/brf.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace s2plume {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kMagic = "BRF1";

void append_f32(std::string& out, const Field& field) {
  const auto n = static_cast<std::size_t>(field.size());
  const std::size_t start = out.size();
  out.resize(start + n * 4);
  std::memcpy(out.data() + start, field.data(), n * 4);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = start; i < out.size(); i += 4) {
      std::swap(out[i], out[i + 3]);
      std::swap(out[i + 1], out[i + 2]);
    }
  }
}

Field take_f32(const std::string& bytes, std::size_t offset, int width, int height) {
  Field field(height, width);
  const auto n = static_cast<std::size_t>(field.size());
  std::memcpy(field.data(), bytes.data() + offset, n * 4);
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(field.data());
    for (std::size_t i = 0; i < n * 4; i += 4) {
      std::swap(p[i], p[i + 3]);
      std::swap(p[i + 1], p[i + 2]);
    }
  }
  return field;
}

void require_finite(const Field& field, const char* what) {
  if (!field.isFinite().all()) {
    throw Error(Errc::invariant, std::string("refusing to write non-finite ") + what);
  }
}

ordered_json header(const char* kind, const char* dtype, Eigen::Index width, Eigen::Index height) {
  ordered_json h;
  h["magic"] = kMagic;
  h["kind"] = kind;
  h["dtype"] = dtype;
  h["width"] = width;
  h["height"] = height;
  return h;
}

std::string finish(const ordered_json& h) { return h.dump() + "\n"; }

std::string encode(const Scene& scene) {
  validate(scene);
  ordered_json h = header("scene", "f32", scene.width, scene.height);
  ordered_json ids = ordered_json::array();
  for (const auto& [id, field] : scene.bands) ids.push_back(id);
  h["bands"] = ids;
  h["pixel_size_m"] = scene.pixel_size_m;
  h["meta"] = ordered_json::parse(scene.meta.dump());
  std::string out = finish(h);
  for (const auto& [id, field] : scene.bands) append_f32(out, field);
  return out;
}

std::string encode(const Field& field) {
  if (field.size() == 0) throw Error(Errc::invariant, "refusing to write empty field");
  require_finite(field, "field");
  ordered_json h = header("field", "f32", field.cols(), field.rows());
  h["meta"] = ordered_json::object();
  std::string out = finish(h);
  append_f32(out, field);
  return out;
}

std::string encode(const Mask& mask) {
  if (mask.size() == 0) throw Error(Errc::invariant, "refusing to write empty mask");
  ordered_json h = header("mask", "u8", mask.cols(), mask.rows());
  h["meta"] = ordered_json::object();
  std::string out = finish(h);
  out.append(reinterpret_cast<const char*>(mask.data()), static_cast<std::size_t>(mask.size()));
  return out;
}

std::string encode(const FeatureStack& stack) {
  validate(stack);
  ordered_json h = header("stack", "f32", stack.width(), stack.height());
  h["bands"] = {"V", "S", "V"};
  ordered_json meta = ordered_json::object();
  if (stack.normalization) {
    ordered_json norm = ordered_json::array();
    for (const auto& s : *stack.normalization) norm.push_back({{"mean", s.mean}, {"std", s.std}});
    meta["normalization"] = norm;
  }
  h["meta"] = meta;
  std::string out = finish(h);
  for (const auto& ch : stack.channels) append_f32(out, ch);
  return out;
}

int dimension(const nlohmann::json& h, const char* key) {
  if (!h.contains(key) || !h[key].is_number_integer()) {
    throw Error(Errc::malformed_header, std::string("missing integer field ") + key);
  }
  const auto v = h[key].get<long long>();
  if (v <= 0 || v > (1 << 20)) throw Error(Errc::malformed_header, std::string("bad ") + key);
  return static_cast<int>(v);
}

}  // namespace

std::string encode_brf(const BrfObject& object) {
  return std::visit([](const auto& x) { return encode(x); }, object);
}

BrfObject decode_brf(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw Error(Errc::malformed_header, "no header terminator");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_header, e.what());
  }
  if (!h.is_object() || h.value("magic", "") != kMagic) {
    throw Error(Errc::malformed_header, "bad magic");
  }
  if (!h.contains("kind") || !h["kind"].is_string() || !h.contains("dtype") ||
      !h["dtype"].is_string()) {
    throw Error(Errc::malformed_header, "missing kind or dtype");
  }
  const std::string kind = h["kind"];
  const std::string dtype = h["dtype"];
  if (dtype != "f32" && dtype != "u8") throw Error(Errc::unknown_dtype, "dtype " + dtype);
  const int width = dimension(h, "width");
  const int height = dimension(h, "height");

  std::vector<std::string> band_ids;
  if (kind == "scene" || kind == "stack") {
    if (!h.contains("bands") || !h["bands"].is_array() || h["bands"].empty()) {
      throw Error(Errc::malformed_header, kind + " needs a band list");
    }
    for (const auto& b : h["bands"]) {
      if (!b.is_string()) throw Error(Errc::malformed_header, "band ids must be strings");
      band_ids.push_back(b);
    }
  } else if (kind != "field" && kind != "mask") {
    throw Error(Errc::malformed_header, "unknown kind " + kind);
  }
  const bool wants_u8 = kind == "mask";
  if (wants_u8 != (dtype == "u8")) {
    throw Error(Errc::malformed_header, "kind " + kind + " cannot have dtype " + dtype);
  }

  const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t n_bands = band_ids.empty() ? 1 : band_ids.size();
  const std::size_t expected = pixels * n_bands * (wants_u8 ? 1 : 4);
  const std::size_t offset = newline + 1;
  const std::size_t actual = bytes.size() - offset;
  if (actual != expected) {
    throw Error(Errc::length_mismatch, "expected " + std::to_string(expected) +
                                           " payload bytes, found " + std::to_string(actual));
  }

  const nlohmann::json meta = h.contains("meta") ? h["meta"] : nlohmann::json::object();
  if (kind == "mask") {
    Mask mask(height, width);
    std::memcpy(mask.data(), bytes.data() + offset, pixels);
    return mask;
  }
  if (kind == "field") return take_f32(bytes, offset, width, height);
  if (kind == "stack") {
    if (band_ids.size() != 3) throw Error(Errc::malformed_header, "stack needs 3 bands");
    FeatureStack stack;
    for (std::size_t i = 0; i < 3; ++i) {
      stack.channels[i] = take_f32(bytes, offset + i * pixels * 4, width, height);
    }
    if (meta.contains("normalization")) {
      const auto& norm = meta["normalization"];
      if (!norm.is_array() || norm.size() != 3) {
        throw Error(Errc::malformed_header, "normalization must list 3 channels");
      }
      std::array<ChannelStats, 3> stats;
      for (std::size_t i = 0; i < 3; ++i) {
        stats[i] = {norm[i].at("mean").get<double>(), norm[i].at("std").get<double>()};
      }
      stack.normalization = stats;
    }
    validate(stack);
    return stack;
  }

  Scene scene;
  scene.width = width;
  scene.height = height;
  scene.pixel_size_m = h.value("pixel_size_m", 20.0);
  scene.meta = meta;
  for (std::size_t i = 0; i < band_ids.size(); ++i) {
    if (!scene.bands.emplace(band_ids[i], take_f32(bytes, offset + i * pixels * 4, width, height))
             .second) {
      throw Error(Errc::malformed_header, "duplicate band " + band_ids[i]);
    }
  }
  validate(scene);
  return scene;
}

namespace {

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

template <typename T>
T read_as(const std::filesystem::path& path, const char* kind) {
  BrfObject object = read_brf(path);
  if (auto* x = std::get_if<T>(&object)) return std::move(*x);
  throw Error(Errc::invalid_argument, path.string() + " is not a " + kind);
}

}  // namespace

void write_brf(const Scene& scene, const std::filesystem::path& path) { write_bytes(encode(scene), path); }
void write_brf(const Field& field, const std::filesystem::path& path) { write_bytes(encode(field), path); }
void write_brf(const Mask& mask, const std::filesystem::path& path) { write_bytes(encode(mask), path); }
void write_brf(const FeatureStack& stack, const std::filesystem::path& path) {
  write_bytes(encode(stack), path);
}

BrfObject read_brf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_brf(buf.str());
}

Scene read_scene(const std::filesystem::path& path) { return read_as<Scene>(path, "scene"); }
Field read_field(const std::filesystem::path& path) { return read_as<Field>(path, "field"); }
Mask read_mask(const std::filesystem::path& path) { return read_as<Mask>(path, "mask"); }
FeatureStack read_stack(const std::filesystem::path& path) {
  return read_as<FeatureStack>(path, "stack");
}

}  // namespace s2plume
