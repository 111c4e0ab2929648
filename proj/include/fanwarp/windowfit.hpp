#pragma once

#include "fanwarp/raster.hpp"

namespace fanwarp {

constexpr double kDefaultWindowThreshold = 0.04;

// Minimum fraction of above-threshold pixels for a frame to count as having
// a viewing window at all.
constexpr double kMinWindowOccupancy = 0.05;

// |dy/dx| steeper than this on both lateral edges classifies the frame as a
// linear-probe capture.
constexpr double kLinearSteepnessCutoff = 20.0;

// Recovers viewing-window corners from pixel content: binarize, take per-row
// extremal bright columns, fit lateral edge lines over the middle 60% of
// occupied rows, intersect with the top/bottom occupied rows. Throws
// "no window found" below the occupancy floor and an estimation-failure
// error when the fitted edges cross inside the occupied band.
ViewingWindow estimate_window(const GrayImage& img,
                              double threshold = kDefaultWindowThreshold);

}  // namespace fanwarp
