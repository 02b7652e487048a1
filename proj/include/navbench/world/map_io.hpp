#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "navbench/core/error.hpp"
#include "navbench/world/occupancy_grid.hpp"

namespace navbench {

// Map files are a binary greymap (P5, maxval 255) plus a JSON sidecar with the
// same stem. Image row 0 is the top of the map (largest y). Pixels below 128
// are occupied; the writer emits 0 for occupied and 255 for free.

inline std::string encode_pgm(const OccupancyGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.width()) + " " +
                    std::to_string(grid.height()) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + grid.size());
  std::size_t k = header;
  for (int row = 0; row < grid.height(); ++row) {
    const int y = grid.height() - 1 - row;
    for (int x = 0; x < grid.width(); ++x)
      out[k++] = static_cast<char>(grid.occupied(CellIndex{x, y}) ? 0 : 255);
  }
  return out;
}

namespace detail {

class PgmReader {
 public:
  explicit PgmReader(std::string_view data) : data_(data) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    int value = 0;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      value = value * 10 + (data_[pos_] - '0');
      if (value > 1'000'000) throw ParseError(std::string("pgm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start)
      throw ParseError(std::string("pgm: expected ") + what + " at byte " + std::to_string(start));
    return value;
  }

  std::size_t pos_ = 0;
  std::string_view data_;
};

}  // namespace detail

inline OccupancyGrid decode_pgm(std::string_view data, double resolution, Vec2 origin) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
    throw ParseError("pgm: missing P5 magic at byte 0");
  detail::PgmReader r(data);
  r.pos_ = 2;
  const int w = r.read_int("width");
  const int h = r.read_int("height");
  const int maxval = r.read_int("maxval");
  if (maxval != 255) throw ParseError("pgm: maxval must be 255");
  // exactly one whitespace byte separates the header from the raster
  if (r.pos_ >= data.size() || !std::isspace(static_cast<unsigned char>(data[r.pos_])))
    throw ParseError("pgm: missing separator after maxval at byte " + std::to_string(r.pos_));
  ++r.pos_;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() - r.pos_ < need)
    throw ParseError("pgm: raster truncated, expected " + std::to_string(need) + " bytes");
  OccupancyGrid grid(w, h, resolution, origin);
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<unsigned char>(data[r.pos_++]);
      if (v < 128) grid.set_occupied({x, y});
    }
  }
  return grid;
}

inline nlohmann::json map_meta_json(const OccupancyGrid& grid, const std::string& image_name) {
  return {{"image", image_name},
          {"resolution", grid.resolution()},
          {"origin", {grid.origin().x, grid.origin().y}}};
}

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace detail

/// Writes `<stem>.pgm` and `<stem>.json`. Any extension on `stem` is replaced.
inline void save_map(const OccupancyGrid& grid, std::filesystem::path stem) {
  stem.replace_extension();
  auto pgm = stem;
  pgm += ".pgm";
  auto meta = stem;
  meta += ".json";
  detail::write_file(pgm, encode_pgm(grid));
  detail::write_file(meta, map_meta_json(grid, pgm.filename().string()).dump(2) + "\n");
}

/// Loads a map from either its `.pgm` or its `.json` sidecar path.
inline OccupancyGrid load_map(std::filesystem::path path) {
  path.replace_extension(".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!meta.contains("resolution") || !meta["resolution"].is_number())
    throw ParseError(path.string() + ": field 'resolution' missing or not a number");
  const auto& o = meta.value("origin", nlohmann::json::array({0.0, 0.0}));
  if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number())
    throw ParseError(path.string() + ": field 'origin' must be [x, y]");
  auto image = path;
  if (meta.contains("image") && meta["image"].is_string())
    image = path.parent_path() / meta["image"].get<std::string>();
  else
    image.replace_extension(".pgm");
  return decode_pgm(detail::read_file(image), meta["resolution"].get<double>(),
                    {o[0].get<double>(), o[1].get<double>()});
}

}  // namespace navbench
