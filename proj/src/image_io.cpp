#include "fanwarp/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace fanwarp {

namespace fs = std::filesystem;

std::uint8_t quantize_intensity(double v) {
  const double q = std::floor(v * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

GrayImage to_gray(const Image8& img) {
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.data[i] = img.pixels[i] / 255.0;
  }
  return out;
}

Image8 to_bytes(const GrayImage& img) {
  Image8 out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.pixels[i] = quantize_intensity(img.data[i]);
  }
  return out;
}

namespace {

struct FileCloser {
  std::FILE* fp = nullptr;
  ~FileCloser() {
    if (fp) std::fclose(fp);
  }
};

Image8 load_png_bytes(const fs::path& path) {
  FileCloser file;
  file.fp = std::fopen(path.string().c_str(), "rb");
  if (!file.fp) throw std::runtime_error("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng init failed");
  }

  // All buffers live before setjmp so unwinding from the throw below runs
  // their destructors.
  std::vector<std::uint8_t> interleaved;
  std::vector<png_bytep> rows;
  Image8 out;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode PNG " + path.string());
  }

  png_init_io(png, file.fp);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (out.width <= 0 || out.height <= 0 || (channels != 1 && channels != 3)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported PNG layout in " + path.string());
  }

  const std::size_t stride = static_cast<std::size_t>(out.width) * channels;
  interleaved.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = interleaved.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  if (channels == 1) {
    std::copy(interleaved.begin(), interleaved.end(), out.pixels.begin());
  } else {
    // BT.601 luma.
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      const double r = interleaved[3 * i];
      const double g = interleaved[3 * i + 1];
      const double b = interleaved[3 * i + 2];
      out.pixels[i] = quantize_intensity((0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
    }
  }
  return out;
}

int pgm_next_value(std::istream& in, const fs::path& path) {
  // Skips whitespace and '#' comments.
  while (true) {
    const int c = in.peek();
    if (c == EOF) throw std::runtime_error("truncated PGM header in " + path.string());
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int value = 0;
  if (!(in >> value)) throw std::runtime_error("malformed PGM header in " + path.string());
  return value;
}

Image8 load_pgm_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') {
    throw std::runtime_error("not a binary PGM (P5): " + path.string());
  }
  Image8 out;
  out.width = pgm_next_value(in, path);
  out.height = pgm_next_value(in, path);
  const int maxval = pgm_next_value(in, path);
  if (out.width <= 0 || out.height <= 0) {
    throw std::runtime_error("invalid PGM dimensions in " + path.string());
  }
  if (maxval != 255) {
    throw std::runtime_error("unsupported PGM maxval " + std::to_string(maxval) + " in " +
                             path.string() + " (only 255 is handled)");
  }
  in.get();  // single whitespace after maxval
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(out.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(out.pixels.size())) {
    throw std::runtime_error("truncated PGM pixel data in " + path.string());
  }
  return out;
}

}  // namespace

Image8 load_image_bytes(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open " + path.string());
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (png_sig_cmp(sig, 0, 8) == 0) return load_png_bytes(path);
  if (sig[0] == 'P' && sig[1] == '5') return load_pgm_bytes(path);
  throw std::runtime_error("unrecognized image format (expected PNG or P5 PGM): " + path.string());
}

GrayImage load_image(const fs::path& path) {
  return to_gray(load_image_bytes(path));
}

void save_png(const GrayImage& img, const fs::path& path) {
  if (img.empty()) throw std::invalid_argument("save_png: empty image");
  const Image8 bytes = to_bytes(img);

  FileCloser file;
  file.fp = std::fopen(path.string().c_str(), "wb");
  if (!file.fp) throw std::runtime_error("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng init failed");
  }

  std::vector<png_bytep> rows(img.height);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode PNG " + path.string());
  }

  png_init_io(png, file.fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(bytes.pixels.data() + static_cast<std::size_t>(y) * img.width);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_pgm(const GrayImage& img, const fs::path& path) {
  if (img.empty()) throw std::invalid_argument("save_pgm: empty image");
  const Image8 bytes = to_bytes(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.pixels.data()),
            static_cast<std::streamsize>(bytes.pixels.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void save_image(const GrayImage& img, const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") {
    save_png(img, path);
  } else if (ext == ".pgm" || ext == ".PGM") {
    save_pgm(img, path);
  } else {
    throw std::invalid_argument("save_image: unsupported extension \"" + ext +
                                "\" (use .png or .pgm)");
  }
}

}  // namespace fanwarp
