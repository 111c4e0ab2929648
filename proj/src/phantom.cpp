#include "fanwarp/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fanwarp/image_io.hpp"

namespace fanwarp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kSpeckleSigma = 0.35;
constexpr double kBaseIntensity = 0.30;
constexpr double kStructureGain = 2.0;
constexpr double kStreakWidth = 1.8;   // Gaussian sigma, pixels
constexpr double kBandWidth = 2.2;
constexpr double kContactBandWidth = 2.0;

// Separable 3x3 binomial blur, two passes. Correlates the speckle the way
// real echo texture is correlated; pure white noise is not.
void blur_binomial(std::vector<double>& field, int w, int h, int passes) {
  std::vector<double> tmp(field.size());
  for (int pass = 0; pass < passes; ++pass) {
    for (int y = 0; y < h; ++y) {
      const double* row = field.data() + static_cast<std::size_t>(y) * w;
      double* out = tmp.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        const double l = row[std::max(x - 1, 0)];
        const double c = row[x];
        const double r = row[std::min(x + 1, w - 1)];
        out[x] = 0.25 * l + 0.5 * c + 0.25 * r;
      }
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        const double u = tmp[static_cast<std::size_t>(std::max(y - 1, 0)) * w + x];
        const double c = tmp[static_cast<std::size_t>(y) * w + x];
        const double d = tmp[static_cast<std::size_t>(std::min(y + 1, h - 1)) * w + x];
        field[static_cast<std::size_t>(y) * w + x] = 0.25 * u + 0.5 * c + 0.25 * d;
      }
    }
  }
}

Point2 lerp(Point2 a, Point2 b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

struct Streak {
  Point2 top;
  Point2 bottom;
  double inv_len = 0.0;  // |dy| / segment length, for perpendicular distance
};

}  // namespace

ViewingWindow sample_phantom_window(Probe probe, Rng& rng) {
  ViewingWindow w;
  w.probe = probe;
  if (probe == Probe::convex) {
    const double slope = 1.5 + 2.0 * rng.next_unit();
    const double y0 = 22.0 + 16.0 * rng.next_unit();
    const double half_top = 28.0 + 18.0 * rng.next_unit();
    double depth = 140.0 + 50.0 * rng.next_unit();
    depth = std::min(depth, slope * (120.0 - half_top));  // keep the flare on canvas
    const double cx = 122.0 + 12.0 * rng.next_unit();
    const double half_bottom = half_top + depth / slope;
    w.p1_left = {cx - half_top, y0};
    w.p1_right = {cx + half_top, y0};
    w.p2_left = {cx - half_bottom, y0 + depth};
    w.p2_right = {cx + half_bottom, y0 + depth};
  } else {
    const double half = 32.0 + 24.0 * rng.next_unit();
    const double y0 = 22.0 + 16.0 * rng.next_unit();
    const double depth = 150.0 + 50.0 * rng.next_unit();
    const double cx = 122.0 + 12.0 * rng.next_unit();
    w.p1_left = {cx - half, y0};
    w.p1_right = {cx + half, y0};
    w.p2_left = {cx - half, y0 + depth};
    w.p2_right = {cx + half, y0 + depth};
  }
  w.validate();
  return w;
}

GrayImage render_phantom(const ViewingWindow& w, Label label, Rng& rng) {
  const int size = kPhantomSize;
  std::vector<double> noise(static_cast<std::size_t>(size) * size);
  for (double& v : noise) v = std::exp(rng.next_normal(0.0, kSpeckleSigma));
  blur_binomial(noise, size, size, 2);

  const double y_top = 0.5 * (w.p1_left.y + w.p1_right.y);
  const double y_bot = 0.5 * (w.p2_left.y + w.p2_right.y);
  const double depth = y_bot - y_top;

  // Bright band just below the contact edge, common to both classes.
  const double contact_y = y_top + (0.06 + 0.06 * rng.next_unit()) * depth;

  std::vector<Streak> streaks;
  std::vector<double> band_rows;
  const int n_features = 2 + static_cast<int>(rng.next_below(3));
  if (label == Label::positive) {
    // Comet-tail-like streaks: they follow the probe's scan direction, so in
    // a flared window they converge toward the beam origin.
    for (int i = 0; i < n_features; ++i) {
      const double t = 0.12 + 0.76 * rng.next_unit();
      Streak s;
      s.top = lerp(w.p1_left, w.p1_right, t);
      s.bottom = lerp(w.p2_left, w.p2_right, t);
      const double len = std::hypot(s.bottom.x - s.top.x, s.bottom.y - s.top.y);
      s.inv_len = std::abs(s.bottom.y - s.top.y) / len;
      streaks.push_back(s);
    }
  } else {
    // Reverberation-like bands at depth, parallel to the contact edge.
    for (int i = 0; i < n_features; ++i) {
      band_rows.push_back(y_top + (0.35 + 0.55 * rng.next_unit()) * depth);
    }
  }

  const WindowMask mask = render_mask(w, size, size);
  GrayImage img = GrayImage::filled(size, size, 0.0);
  for (int y = 0; y < size; ++y) {
    const double cy = y + 0.5;
    double row_structure = std::exp(-0.5 * std::pow((cy - contact_y) / kContactBandWidth, 2.0));
    for (const double by : band_rows) {
      row_structure += std::exp(-0.5 * std::pow((cy - by) / kBandWidth, 2.0));
    }
    for (int x = 0; x < size; ++x) {
      if (!mask.at(x, y)) continue;
      const double cx = x + 0.5;
      double s = row_structure;
      for (const Streak& streak : streaks) {
        const double x_line = streak.top.x + (cy - streak.top.y) *
                                                 (streak.bottom.x - streak.top.x) /
                                                 (streak.bottom.y - streak.top.y);
        const double d = std::abs(cx - x_line) * streak.inv_len;
        s += std::exp(-0.5 * (d / kStreakWidth) * (d / kStreakWidth));
      }
      const double v = kBaseIntensity * noise[static_cast<std::size_t>(y) * size + x] *
                       (1.0 + kStructureGain * s);
      img.at(x, y) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

PhantomSummary generate_phantoms(const PhantomOptions& options) {
  if (options.count < 1) throw std::invalid_argument("phantom count must be >= 1");
  if (!(options.convex_fraction >= 0.0 && options.convex_fraction <= 1.0)) {
    throw std::invalid_argument("convex fraction must be in [0,1]");
  }
  if (options.workers < 1) throw std::invalid_argument("workers must be >= 1");

  const fs::path image_dir = options.out_dir / "images";
  std::error_code ec;
  fs::create_directories(image_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + image_dir.string() + ": " +
                             ec.message());
  }

  const int n = options.count;
  const int n_convex = static_cast<int>(std::lround(options.convex_fraction * n));

  struct Plan {
    std::string id;
    std::string video_id;
    Probe probe;
    Label label;
    ViewingWindow window;
  };
  std::vector<Plan> plans(n);
  for (int i = 0; i < n; ++i) {
    Plan& p = plans[i];
    p.probe = i < n_convex ? Probe::convex : Probe::linear;
    const int class_index = p.probe == Probe::convex ? i : i - n_convex;
    const int group = class_index / 8;
    std::ostringstream vid;
    vid << (p.probe == Probe::convex ? "cvx" : "lin") << std::setw(3) << std::setfill('0') << group;
    p.video_id = vid.str();
    p.id = p.video_id + "_f" + std::to_string(class_index % 8);
    p.label = class_index % 2 == 0 ? Label::positive : Label::negative;
  }
  // One geometry per video group, derived from the group name so it does not
  // depend on generation order.
  for (int i = 0; i < n; ++i) {
    if (i == 0 || plans[i].video_id != plans[i - 1].video_id) {
      Rng geom_rng = derive_rng(options.seed, "geom:" + plans[i].video_id, 0);
      plans[i].window = sample_phantom_window(plans[i].probe, geom_rng);
    } else {
      plans[i].window = plans[i - 1].window;
    }
  }

  auto render_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng frame_rng = derive_rng(options.seed, "frame:" + std::to_string(i), 0);
      const GrayImage img = render_phantom(plans[i].window, plans[i].label, frame_rng);
      save_png(img, image_dir / (plans[i].id + ".png"));
    }
  };
  const int workers = std::clamp(options.workers, 1, n);
  if (workers == 1) {
    render_range(0, n);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
      const int begin = static_cast<int>(static_cast<long long>(n) * t / workers);
      const int end = static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
      pool.emplace_back(render_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  PhantomSummary summary;
  summary.total = n;
  summary.manifest_path = options.out_dir / "manifest.jsonl";
  std::ofstream manifest(summary.manifest_path);
  if (!manifest) {
    throw std::runtime_error("cannot write manifest " + summary.manifest_path.string());
  }
  for (const Plan& p : plans) {
    if (p.probe == Probe::convex) ++summary.convex; else ++summary.linear;
    if (p.label == Label::positive) ++summary.positive; else ++summary.negative;
    json j;
    j["id"] = p.id;
    j["path"] = "images/" + p.id + ".png";
    j["probe"] = to_string(p.probe);
    j["label"] = to_string(p.label);
    j["video_id"] = p.video_id;
    j["window"] = window_annotation(p.window);
    manifest << j.dump() << "\n";
  }
  return summary;
}

}  // namespace fanwarp
