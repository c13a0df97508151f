#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgnav {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};
static_assert(sizeof(Rgb) == 3);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> px;

  Image() = default;
  Image(int w, int h, Rgb fill = {}) : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}
  void set(int r, int c, Rgb v) {
    if (r >= 0 && c >= 0 && r < height && c < width) px[static_cast<std::size_t>(r) * width + c] = v;
  }
  void disk(int r, int c, int radius, Rgb v);
  void line(int r0, int c0, int r1, int c1, Rgb v);
};

std::string encode_png(const Image& img);
void write_png(const Image& img, const std::string& path);
std::string base64_encode(const std::string& bytes);

}  // namespace sgnav
