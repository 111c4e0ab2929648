#include "fanwarp/augment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace fanwarp {

namespace {

std::atomic<std::uint64_t> g_augment_calls{0};

bool same_corners(const ViewingWindow& a, const ViewingWindow& b) {
  return a.p1_left.x == b.p1_left.x && a.p1_left.y == b.p1_left.y &&
         a.p2_left.x == b.p2_left.x && a.p2_left.y == b.p2_left.y &&
         a.p1_right.x == b.p1_right.x && a.p1_right.y == b.p1_right.y &&
         a.p2_right.x == b.p2_right.x && a.p2_right.y == b.p2_right.y;
}

AugmentResult passthrough(const GrayImage& img, const ViewingWindow& w) {
  return AugmentResult{img, w, Homography::identity(), 0.0};
}

AugmentResult resample_and_warp(const GrayImage& img, const ViewingWindow& w, double slope,
                                const AugmentPolicy& policy) {
  const ViewingWindow resampled = resample_window(w, slope, policy.s_min);
  if (same_corners(w, resampled)) {
    // Identity resampling; skip the warp so the degenerate policy is a
    // bit-exact no-op.
    AugmentResult r = passthrough(img, w);
    r.slope = slope;
    return r;
  }
  const Homography h = estimate_homography(w.corners(), resampled.corners());
  AugmentResult r;
  r.image = warp_image(img, h, 0.0, policy.warp_workers);
  r.window = resampled;
  r.h = h;
  r.slope = slope;
  return r;
}

void trim(std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  const auto end = s.find_last_not_of(" \t\r");
  s = begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("policy key \"" + key + "\": expected true/false, got \"" + v + "\"");
}

double parse_double(const std::string& v, const std::string& key) {
  std::size_t consumed = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != v.size()) {
    throw std::runtime_error("policy key \"" + key + "\": invalid number \"" + v + "\"");
  }
  return out;
}

}  // namespace

void AugmentPolicy::validate() const {
  if (convex_sigma < 0 || linear_sigma < 0) {
    throw std::invalid_argument("augment policy: sigmas must be >= 0");
  }
  if (!(s_min > 0)) throw std::invalid_argument("augment policy: s_min must be positive");
  if (linear_center < s_min) {
    throw std::invalid_argument("augment policy: linear_center must be >= s_min");
  }
  if (max_retries < 1) throw std::invalid_argument("augment policy: max_retries must be >= 1");
  if (warp_workers < 1) throw std::invalid_argument("augment policy: warp_workers must be >= 1");
}

AugmentPolicy load_policy(const std::filesystem::path& path, const WarnSink& warn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file " + path.string());
  AugmentPolicy policy;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("policy file " + path.string() + " line " +
                               std::to_string(lineno) + ": expected key = value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    trim(key);
    trim(value);
    if (key == "convex_sigma") {
      policy.convex_sigma = parse_double(value, key);
    } else if (key == "linear_center") {
      policy.linear_center = parse_double(value, key);
    } else if (key == "linear_sigma") {
      policy.linear_sigma = parse_double(value, key);
    } else if (key == "s_min") {
      policy.s_min = parse_double(value, key);
    } else if (key == "max_retries") {
      policy.max_retries = static_cast<int>(parse_double(value, key));
    } else if (key == "apply_linear_transform") {
      policy.apply_linear_transform = parse_bool(value, key);
    } else if (warn) {
      warn("policy file " + path.string() + " line " + std::to_string(lineno) +
           ": unknown key \"" + key + "\" ignored");
    } else {
      std::cerr << "warning: policy file " << path.string() << " line " << lineno
                << ": unknown key \"" << key << "\" ignored\n";
    }
  }
  policy.validate();
  return policy;
}

EdgeSlope sample_slope(double center, double sigma, double min_slope, int max_retries, Rng& rng) {
  if (sigma < 0) throw std::invalid_argument("sample_slope: sigma must be >= 0");
  if (center < min_slope) throw std::invalid_argument("sample_slope: center below minimum slope");
  double s = rng.next_normal(center, sigma);
  for (int attempt = 0; s < min_slope && attempt < max_retries; ++attempt) {
    s = rng.next_normal(center, sigma);
  }
  if (s < min_slope) s = min_slope;
  return EdgeSlope{s};
}

AugmentResult augment_convex(const GrayImage& img, const ViewingWindow& w,
                             const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  if (w.probe != Probe::convex) {
    throw std::invalid_argument("augment_convex: window is not from a convex probe");
  }
  const EdgeSlopes s = edge_slopes(w);
  double center;
  if (s.left.is_vertical() || s.right.is_vertical()) {
    // Vertical edges on a convex record leave no usable original slope.
    std::cerr << "note: convex window has vertical edge(s); centering slope distribution at "
              << policy.linear_center << "\n";
    center = policy.linear_center;
  } else {
    center = 0.5 * (s.left.value + s.right.value);
  }
  const EdgeSlope drawn =
      sample_slope(center, policy.convex_sigma, policy.s_min, policy.max_retries, rng);
  return resample_and_warp(img, w, drawn.value, policy);
}

AugmentResult augment_linear(const GrayImage& img, const ViewingWindow& w,
                             const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  if (w.probe != Probe::linear) {
    throw std::invalid_argument("augment_linear: window is not from a linear probe");
  }
  if (std::abs(w.p1_left.x - w.p2_left.x) > 1.0 || std::abs(w.p1_right.x - w.p2_right.x) > 1.0) {
    throw std::invalid_argument(
        "augment_linear: linear window is not rectangular within 1 pixel");
  }
  const EdgeSlope drawn =
      sample_slope(policy.linear_center, policy.linear_sigma, policy.s_min, policy.max_retries, rng);
  return resample_and_warp(img, w, drawn.value, policy);
}

AugmentResult augment(const GrayImage& img, const ViewingWindow& w, const AugmentPolicy& policy,
                      Rng& rng) {
  g_augment_calls.fetch_add(1, std::memory_order_relaxed);
  switch (w.probe) {
    case Probe::convex:
      return augment_convex(img, w, policy, rng);
    case Probe::linear:
      if (!policy.apply_linear_transform) return passthrough(img, w);
      return augment_linear(img, w, policy, rng);
  }
  throw std::invalid_argument("augment: unknown probe kind");
}

std::uint64_t augment_call_count() {
  return g_augment_calls.load(std::memory_order_relaxed);
}

}  // namespace fanwarp
