#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fanwarp/augment.hpp"
#include "fanwarp/geometry.hpp"
#include "fanwarp/image_io.hpp"
#include "fanwarp/raster.hpp"

namespace fanwarp {

enum class Label { positive, negative };

const char* to_string(Label l);
Label label_from_string(const std::string& s);

enum class SplitName { train, val, test };

const char* to_string(SplitName s);
SplitName split_from_string(const std::string& s);

struct ManifestRecord {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest's directory
  Probe probe = Probe::convex;
  Label label = Label::negative;
  std::optional<std::string> video_id;
  std::optional<ViewingWindow> window;
};

// JSON lines, one record per line. Unknown fields are reported through `warn`
// and ignored; structural problems throw with the offending line number.
std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path,
                                          const WarnSink& warn = {});

struct SplitFractions {
  double train = 0.72;
  double val = 0.14;
  double test = 0.14;

  void validate() const;  // positive, sum to 1 within 1e-9
};

struct SplitAssignment {
  std::map<std::string, SplitName> by_id;

  SplitName at(const std::string& id) const;
  std::size_t size_of(SplitName s) const;
  void save(const std::filesystem::path& path) const;
  static SplitAssignment load(const std::filesystem::path& path);
};

struct SplitOptions {
  SplitFractions fractions;
  std::uint64_t seed = 0;
  // When false, records are grouped by video_id (falling back to id for
  // ungrouped records) so that no video straddles two splits.
  bool image_level = false;
};

// Stratified by (label x probe), group-aware, deterministic per seed. Groups
// are shuffled and assigned greedily against largest-remainder integer
// targets, so each split lands within one group of its target size.
SplitAssignment split(const std::vector<ManifestRecord>& records, const SplitOptions& options,
                      const WarnSink& warn = {});

struct DatasetStats {
  std::size_t total = 0;
  std::size_t convex = 0;
  std::size_t linear = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t by_probe_label[2][2] = {{0, 0}, {0, 0}};  // [probe][label]
  std::size_t with_window = 0;

  std::size_t probe_label(Probe p, Label l) const {
    return by_probe_label[static_cast<int>(p)][static_cast<int>(l)];
  }
  std::string table() const;  // aligned text
};

DatasetStats stats(const std::vector<ManifestRecord>& records);

// Byte cache for decoded images, for training loops that revisit files every
// epoch. Not thread-safe.
class ImageCache {
 public:
  const Image8& get(const std::filesystem::path& path) const;

 private:
  mutable std::unordered_map<std::string, Image8> entries_;
};

struct StreamItem {
  std::string id;
  GrayImage image;
  Label label = Label::negative;
};

struct StreamOptions {
  SplitName split = SplitName::train;
  AugmentPolicy policy;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  // Master augmentation switch for the train split. Val/test streams never
  // augment regardless of this flag.
  bool augment = true;
};

// Yields every record of the chosen split exactly once per epoch, in an order
// shuffled by (seed, split, epoch). Train items are augmented with a
// per-item generator derived from (seed, id, epoch), so the output for an
// item does not depend on delivery order or on any other item.
class SampleStream {
 public:
  SampleStream(const std::vector<ManifestRecord>& records, const SplitAssignment& assignment,
               const StreamOptions& options, const ImageCache* cache = nullptr);

  std::optional<StreamItem> next();
  const std::vector<const ManifestRecord*>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<const ManifestRecord*> order_;
  StreamOptions options_;
  const ImageCache* cache_;
  std::size_t cursor_ = 0;
};

}  // namespace fanwarp
