#pragma once

#include "ifgsim/core/errors.hpp"
#include "ifgsim/imaging/interferogram.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ifgsim::io {

enum class Colormap { diverging, gray };

inline Colormap parse_colormap(const std::string& name) {
  if (name == "diverging") return Colormap::diverging;
  if (name == "gray" || name == "grey") return Colormap::gray;
  throw ConfigError("unknown colormap '" + name + "' (expected diverging or gray)");
}

struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb; ///< row-major, 3 bytes per pixel, top row = largest y
  double min = 0.0;
  double max = 0.0;
};

/// Maps S to color with a scale symmetric about S = 0: +-max|S| hit the
/// colormap ends and S = 0 the midpoint. The diverging map runs
/// blue - white - red.
inline Raster rasterize(const Interferogram& img, Colormap map) {
  Raster r;
  const std::size_t n = img.grid.n();
  r.width = r.height = n;
  r.rgb.resize(3 * n * n);
  const auto [lo, hi] = std::minmax_element(img.signal.begin(), img.signal.end());
  r.min = *lo;
  r.max = *hi;
  const double scale = std::max(std::abs(r.min), std::abs(r.max));
  static constexpr std::array<double, 3> white{255, 255, 255};
  static constexpr std::array<double, 3> blue{59, 76, 192};
  static constexpr std::array<double, 3> red{180, 4, 38};
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      const double v = img.at(n - 1 - row, col);
      const double t = scale > 0.0 ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
      std::uint8_t* px = &r.rgb[3 * (row * n + col)];
      if (map == Colormap::gray) {
        const auto g = static_cast<std::uint8_t>(std::lround(127.5 * (1.0 + t)));
        px[0] = px[1] = px[2] = g;
      } else {
        const auto& end = t < 0.0 ? blue : red;
        const double a = std::abs(t);
        for (int c = 0; c < 3; ++c)
          px[c] = static_cast<std::uint8_t>(std::lround(white[c] + a * (end[c] - white[c])));
      }
    }
  }
  return r;
}

inline void write_ppm(const std::filesystem::path& path, const Raster& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << r.width << ' ' << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_png(const std::filesystem::path& path, const Raster& r) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t row = 0; row < r.height; ++row)
    png_write_row(png, const_cast<png_bytep>(&r.rgb[3 * r.width * row]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

} // namespace ifgsim::io
