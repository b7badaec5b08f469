#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace texloc {

/// A camera frame or floor map with full-resolution Y, U and V planes.
/// Intensities are 8 bit, [0, 255].
struct ImageYuv {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> y_plane;
  std::vector<std::uint8_t> u_plane;
  std::vector<std::uint8_t> v_plane;

  ImageYuv() = default;
  ImageYuv(int w, int h, std::uint8_t fill_y = 0, std::uint8_t fill_u = 128,
           std::uint8_t fill_v = 128)
      : width(w),
        height(h),
        y_plane(static_cast<std::size_t>(w) * h, fill_y),
        u_plane(static_cast<std::size_t>(w) * h, fill_u),
        v_plane(static_cast<std::size_t>(w) * h, fill_v) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("ImageYuv: non-positive size");
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  std::uint8_t& y_at(int x, int y) { return y_plane[index(x, y)]; }
  std::uint8_t& u_at(int x, int y) { return u_plane[index(x, y)]; }
  std::uint8_t& v_at(int x, int y) { return v_plane[index(x, y)]; }
  std::uint8_t y_at(int x, int y) const { return y_plane[index(x, y)]; }
  std::uint8_t u_at(int x, int y) const { return u_plane[index(x, y)]; }
  std::uint8_t v_at(int x, int y) const { return v_plane[index(x, y)]; }

  void validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("ImageYuv: non-positive size");
    if (y_plane.size() != pixel_count() || u_plane.size() != pixel_count() ||
        v_plane.size() != pixel_count())
      throw std::invalid_argument("ImageYuv: plane size does not match width*height");
  }
};

/// Binary PPM (P6) container; the Y/U/V planes are stored as the R/G/B
/// channels. Round-trips bit-exactly.
void write_ppm(const ImageYuv& img, const std::string& path);
ImageYuv read_ppm(const std::string& path);

}  // namespace texloc
