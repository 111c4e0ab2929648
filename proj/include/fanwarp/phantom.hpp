#pragma once

#include <cstdint>
#include <filesystem>

#include "fanwarp/dataset.hpp"
#include "fanwarp/raster.hpp"
#include "fanwarp/rng.hpp"

namespace fanwarp {

// Canvas for generated frames.
constexpr int kPhantomSize = 256;

struct PhantomOptions {
  int count = 0;
  double convex_fraction = 0.5;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  int workers = 1;  // parallelism across frames; output is worker-independent
};

struct PhantomSummary {
  int total = 0;
  int convex = 0;
  int linear = 0;
  int positive = 0;
  int negative = 0;
  std::filesystem::path manifest_path;
};

// Window geometry for one synthetic video group: convex windows flare with a
// slope in [1.5, 3.5], linear windows are exact rectangles.
ViewingWindow sample_phantom_window(Probe probe, Rng& rng);

// One frame: blurred log-normal speckle inside the window, a bright
// contact-parallel band near the top, and class structure — "positive" adds
// 2-4 bright streaks running from the contact edge to the deep edge,
// "negative" adds 2-4 bright bands parallel to the contact edge in the deep
// half. Everything outside the window is exactly 0.
GrayImage render_phantom(const ViewingWindow& w, Label label, Rng& rng);

// Writes <out_dir>/images/*.png plus <out_dir>/manifest.jsonl. Frames are
// grouped 8 per video_id sharing one window geometry; labels alternate so the
// classes stay balanced within one frame.
PhantomSummary generate_phantoms(const PhantomOptions& options);

}  // namespace fanwarp
