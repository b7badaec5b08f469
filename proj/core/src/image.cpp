#include "texloc/image.hpp"

#include <fstream>

namespace texloc {

void write_ppm(const ImageYuv& img, const std::string& path) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      row[3 * x + 0] = img.y_at(x, y);
      row[3 * x + 1] = img.u_at(x, y);
      row[3 * x + 2] = img.v_at(x, y);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

namespace {

int read_ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments per the PPM grammar.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error("read_ppm: truncated header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

ImageYuv read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6') throw std::runtime_error("read_ppm: not a P6 file: " + path);
  const int width = read_ppm_token(in);
  const int height = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (maxval != 255) throw std::runtime_error("read_ppm: only maxval 255 supported");
  if (width <= 0 || height <= 0) throw std::runtime_error("read_ppm: bad dimensions");

  ImageYuv img(width, height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("read_ppm: truncated pixel data in " + path);
    for (int x = 0; x < width; ++x) {
      img.y_at(x, y) = row[3 * x + 0];
      img.u_at(x, y) = row[3 * x + 1];
      img.v_at(x, y) = row[3 * x + 2];
    }
  }
  return img;
}

}  // namespace texloc
