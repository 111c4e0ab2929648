#pragma once

#include <cstdint>
#include <vector>

#include "fanwarp/geometry.hpp"

namespace fanwarp {

// Single-channel raster. Intensities live in [0,1]; quantization to 8 bit
// happens only at I/O boundaries.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // row-major, width * height

  static GrayImage filled(int width, int height, double value);

  bool empty() const { return width <= 0 || height <= 0; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct WindowMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, 0/1

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
};

// Inverse-mapped projective warp with bilinear interpolation. Output has the
// input's dimensions. Pixel-center convention: output pixel (x,y) samples the
// source at invert(h)(x+0.5, y+0.5) - (0.5, 0.5); neighbors outside the image
// contribute `fill`. Row-parallel when workers > 1; results are identical for
// every worker count.
GrayImage warp_image(const GrayImage& img, const Homography& h, double fill = 0.0,
                     int workers = 1);

// Pixel centers strictly inside the quadrilateral p1_left -> p1_right ->
// p2_right -> p2_left.
WindowMask render_mask(const ViewingWindow& w, int width, int height);

// Chebyshev erosion by `radius`; pixels outside the canvas count as false.
WindowMask erode(const WindowMask& mask, int radius);

// Area-averaging downsample. out dimensions must not exceed the input's.
GrayImage downsample(const GrayImage& img, int out_w, int out_h);

// 10*log10(1/MSE) over masked pixels; +infinity for identical content.
double psnr(const GrayImage& a, const GrayImage& b, const WindowMask& mask);

}  // namespace fanwarp
