#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include "fanwarp/geometry.hpp"
#include "fanwarp/raster.hpp"
#include "fanwarp/rng.hpp"

namespace fanwarp {

using WarnSink = std::function<void(const std::string&)>;

// Slope-resampling policy. Convex windows jitter around their own slope,
// linear windows are pulled toward a convex-looking flare.
struct AugmentPolicy {
  double convex_sigma = 0.15;
  double linear_center = 2.5;
  double linear_sigma = 0.15;
  double s_min = kMinSlope;
  int max_retries = 10;
  // Pipeline switch for the ablation where linear frames train untransformed.
  bool apply_linear_transform = true;

  int warp_workers = 1;  // internal parallelism; never changes results

  void validate() const;
};

// Key = value file, '#' comments. All keys optional: convex_sigma,
// linear_center, linear_sigma, s_min, max_retries, apply_linear_transform.
AugmentPolicy load_policy(const std::filesystem::path& path, const WarnSink& warn = {});

// Normal(center, sigma) draw, redrawn up to max_retries while below min_slope,
// then clamped to min_slope.
EdgeSlope sample_slope(double center, double sigma, double min_slope, int max_retries, Rng& rng);

struct AugmentResult {
  GrayImage image;
  ViewingWindow window;
  Homography h;          // maps input-window corners to output-window corners
  double slope = 0.0;    // the sampled slope
};

AugmentResult augment_convex(const GrayImage& img, const ViewingWindow& w,
                             const AugmentPolicy& policy, Rng& rng);
AugmentResult augment_linear(const GrayImage& img, const ViewingWindow& w,
                             const AugmentPolicy& policy, Rng& rng);

// Dispatches on probe kind; honors policy.apply_linear_transform.
AugmentResult augment(const GrayImage& img, const ViewingWindow& w, const AugmentPolicy& policy,
                      Rng& rng);

// Process-wide invocation counter for augment(); exists so evaluation
// pipelines can assert they never augment.
std::uint64_t augment_call_count();

}  // namespace fanwarp
