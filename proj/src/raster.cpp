#include "fanwarp/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fanwarp {

GrayImage GrayImage::filled(int width, int height, double value) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  GrayImage img;
  img.width = width;
  img.height = height;
  img.data.assign(static_cast<std::size_t>(width) * height, value);
  return img;
}

std::size_t WindowMask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

namespace {

inline double sample_or_fill(const GrayImage& img, long long x, long long y, double fill) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return fill;
  return img.data[static_cast<std::size_t>(y) * img.width + x];
}

// One output pixel of the inverse-mapped bilinear warp. hinv is the
// source-from-output matrix.
inline double warp_pixel(const GrayImage& img, const std::array<double, 9>& hinv, int x, int y,
                         double fill) {
  const double px = x + 0.5;
  const double py = y + 0.5;
  const double den = hinv[6] * px + hinv[7] * py + hinv[8];
  if (std::abs(den) <= 1e-12) return fill;
  const double inv = 1.0 / den;
  const double sx = (hinv[0] * px + hinv[1] * py + hinv[2]) * inv - 0.5;
  const double sy = (hinv[3] * px + hinv[4] * py + hinv[5]) * inv - 0.5;
  if (!std::isfinite(sx) || !std::isfinite(sy)) return fill;
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const long long x0 = static_cast<long long>(fx);
  const long long y0 = static_cast<long long>(fy);
  const double wx = sx - fx;
  const double wy = sy - fy;
  const double v00 = sample_or_fill(img, x0, y0, fill);
  const double v01 = sample_or_fill(img, x0 + 1, y0, fill);
  const double v10 = sample_or_fill(img, x0, y0 + 1, fill);
  const double v11 = sample_or_fill(img, x0 + 1, y0 + 1, fill);
  const double top = (1.0 - wx) * v00 + wx * v01;
  const double bottom = (1.0 - wx) * v10 + wx * v11;
  return (1.0 - wy) * top + wy * bottom;
}

}  // namespace

GrayImage warp_image(const GrayImage& img, const Homography& h, double fill, int workers) {
  if (img.empty()) throw std::invalid_argument("warp_image: empty image");
  if (!(fill >= 0.0 && fill <= 1.0)) throw std::invalid_argument("warp_image: fill outside [0,1]");
  const Homography hinv = invert(h);  // throws on singular input

  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(img.data.size());

  auto run_rows = [&](int y_begin, int y_end) {
    for (int y = y_begin; y < y_end; ++y) {
      double* row = out.data.data() + static_cast<std::size_t>(y) * out.width;
      for (int x = 0; x < out.width; ++x) {
        row[x] = warp_pixel(img, hinv.m, x, y, fill);
      }
    }
  };

  const int n = std::clamp(workers, 1, img.height);
  if (n == 1) {
    run_rows(0, img.height);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int y0 = static_cast<int>(static_cast<long long>(img.height) * i / n);
    const int y1 = static_cast<int>(static_cast<long long>(img.height) * (i + 1) / n);
    pool.emplace_back(run_rows, y0, y1);
  }
  for (auto& t : pool) t.join();
  return out;
}

WindowMask render_mask(const ViewingWindow& w, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("render_mask: dimensions must be positive");
  w.validate();
  const auto poly = w.polygon();

  double area2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % 4];
    area2 += p.x * q.y - q.x * p.y;
  }
  if (std::abs(area2) < 1e-9) throw std::invalid_argument("render_mask: window has zero area");
  const double orient = area2 > 0 ? 1.0 : -1.0;

  // Half-plane test needs a convex boundary; the window invariants allow it
  // in principle to be violated by extreme corner sets, so check.
  std::array<double, 4> ex, ey;
  for (int i = 0; i < 4; ++i) {
    ex[i] = poly[(i + 1) % 4].x - poly[i].x;
    ey[i] = poly[(i + 1) % 4].y - poly[i].y;
  }
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    if ((ex[i] * ey[j] - ey[i] * ex[j]) * orient < 0) {
      throw std::invalid_argument("render_mask: window quadrilateral is not convex");
    }
  }

  WindowMask mask;
  mask.width = width;
  mask.height = height;
  mask.data.assign(static_cast<std::size_t>(width) * height, 0);
  for (int y = 0; y < height; ++y) {
    const double cy = y + 0.5;
    for (int x = 0; x < width; ++x) {
      const double cx = x + 0.5;
      bool inside = true;
      for (int i = 0; i < 4 && inside; ++i) {
        const double c = ex[i] * (cy - poly[i].y) - ey[i] * (cx - poly[i].x);
        inside = c * orient > 0.0;  // strictly inside; boundary excluded
      }
      if (inside) mask.data[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  return mask;
}

WindowMask erode(const WindowMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("erode: negative radius");
  WindowMask out;
  out.width = mask.width;
  out.height = mask.height;
  out.data.assign(mask.data.size(), 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool all = true;
      for (int dy = -radius; dy <= radius && all; ++dy) {
        for (int dx = -radius; dx <= radius && all; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height || !mask.at(nx, ny)) {
            all = false;
          }
        }
      }
      if (all) out.data[static_cast<std::size_t>(y) * out.width + x] = 1;
    }
  }
  return out;
}

namespace {

struct AxisSpan {
  int first = 0;
  std::vector<double> weights;
};

std::vector<AxisSpan> axis_overlaps(int in, int out) {
  std::vector<AxisSpan> spans(out);
  for (int o = 0; o < out; ++o) {
    const double lo = static_cast<double>(o) * in / out;
    const double hi = static_cast<double>(o + 1) * in / out;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
    AxisSpan span;
    span.first = first;
    for (int k = first; k <= last; ++k) {
      const double w = std::min(hi, static_cast<double>(k + 1)) - std::max(lo, static_cast<double>(k));
      span.weights.push_back(std::max(w, 0.0));
    }
    spans[o] = std::move(span);
  }
  return spans;
}

}  // namespace

GrayImage downsample(const GrayImage& img, int out_w, int out_h) {
  if (img.empty()) throw std::invalid_argument("downsample: empty image");
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("downsample: output dimensions must be positive");
  if (out_w > img.width || out_h > img.height) {
    throw std::invalid_argument("downsample: output larger than input");
  }
  if (out_w == img.width && out_h == img.height) return img;

  const auto xs = axis_overlaps(img.width, out_w);
  const auto ys = axis_overlaps(img.height, out_h);
  GrayImage out;
  out.width = out_w;
  out.height = out_h;
  out.data.resize(static_cast<std::size_t>(out_w) * out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      double acc = 0.0;
      double total = 0.0;
      for (std::size_t j = 0; j < ys[oy].weights.size(); ++j) {
        const int y = ys[oy].first + static_cast<int>(j);
        const double wy = ys[oy].weights[j];
        for (std::size_t i = 0; i < xs[ox].weights.size(); ++i) {
          const int x = xs[ox].first + static_cast<int>(i);
          const double w = wy * xs[ox].weights[i];
          acc += w * img.at(x, y);
          total += w;
        }
      }
      out.at(ox, oy) = acc / total;
    }
  }
  return out;
}

double psnr(const GrayImage& a, const GrayImage& b, const WindowMask& mask) {
  if (a.width != b.width || a.height != b.height || a.width != mask.width ||
      a.height != mask.height) {
    std::ostringstream os;
    os << "psnr: dimension mismatch (" << a.width << "x" << a.height << " vs " << b.width << "x"
       << b.height << ", mask " << mask.width << "x" << mask.height << ")";
    throw std::invalid_argument(os.str());
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i]) {
      const double d = a.data[i] - b.data[i];
      sum += d * d;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("psnr: mask selects no pixels");
  const double mse = sum / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace fanwarp
