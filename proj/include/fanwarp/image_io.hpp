#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fanwarp/raster.hpp"

namespace fanwarp {

// Quantization convention for 8-bit I/O: round half up into 255 levels.
std::uint8_t quantize_intensity(double v);

// Decoded 8-bit pixels. Loading goes through this representation so that the
// real-valued image is always exactly q/255; color sources are reduced to
// BT.601 luma before quantization.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

GrayImage to_gray(const Image8& img);
Image8 to_bytes(const GrayImage& img);

// Format is detected from content (PNG signature vs "P5").
Image8 load_image_bytes(const std::filesystem::path& path);
GrayImage load_image(const std::filesystem::path& path);

// Format chosen by extension: .png or .pgm.
void save_image(const GrayImage& img, const std::filesystem::path& path);

void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace fanwarp
