#include "fanwarp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "fanwarp/rng.hpp"

namespace fanwarp {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Label l) {
  return l == Label::positive ? "positive" : "negative";
}

Label label_from_string(const std::string& s) {
  if (s == "positive") return Label::positive;
  if (s == "negative") return Label::negative;
  throw std::invalid_argument("unknown label \"" + s + "\" (allowed: positive, negative)");
}

const char* to_string(SplitName s) {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::val: return "val";
    case SplitName::test: return "test";
  }
  return "?";
}

SplitName split_from_string(const std::string& s) {
  if (s == "train") return SplitName::train;
  if (s == "val") return SplitName::val;
  if (s == "test") return SplitName::test;
  throw std::invalid_argument("unknown split \"" + s + "\" (allowed: train, val, test)");
}

namespace {

void warn_or_cerr(const WarnSink& warn, const std::string& message) {
  if (warn) {
    warn(message);
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

const std::set<std::string> kKnownFields = {"id", "path", "probe", "label", "video_id", "window"};

ManifestRecord parse_record(const json& j, const fs::path& base_dir, int lineno,
                            const WarnSink& warn) {
  if (!j.is_object()) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": record is not a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!kKnownFields.count(key)) {
      warn_or_cerr(warn, "line " + std::to_string(lineno) + ": unknown field \"" + key +
                             "\" ignored");
    }
  }
  ManifestRecord rec;
  try {
    rec.id = j.at("id").get<std::string>();
    const fs::path p = j.at("path").get<std::string>();
    rec.path = p.is_absolute() ? p : base_dir / p;
    rec.probe = probe_from_string(j.at("probe").get<std::string>());
    rec.label = label_from_string(j.at("label").get<std::string>());
    if (j.contains("video_id")) rec.video_id = j.at("video_id").get<std::string>();
    if (j.contains("window")) {
      const auto& wj = j.at("window");
      if (!wj.is_array() || wj.size() != 8) {
        throw std::runtime_error("window annotation must be an array of 8 numbers");
      }
      std::array<double, 8> a{};
      for (int i = 0; i < 8; ++i) a[i] = wj.at(i).get<double>();
      ViewingWindow w = window_from_annotation(a, rec.probe);
      if (rec.probe == Probe::linear) {
        if (std::abs(w.p1_left.x - w.p2_left.x) > 1.0 ||
            std::abs(w.p1_right.x - w.p2_right.x) > 1.0) {
          throw std::runtime_error("linear-probe window annotation is not rectangular within 1 pixel");
        }
      }
      rec.window = w;
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("line " + std::to_string(lineno) + " (id \"" +
                             (rec.id.empty() ? "?" : rec.id) + "\"): " + e.what());
  }
  return rec;
}

}  // namespace

std::vector<ManifestRecord> load_manifest(const fs::path& path, const WarnSink& warn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  const fs::path base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");

  std::vector<ManifestRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("manifest " + path.string() + " line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    ManifestRecord rec = parse_record(j, base_dir, lineno, warn);
    if (!seen_ids.insert(rec.id).second) {
      throw std::runtime_error("manifest " + path.string() + " line " + std::to_string(lineno) +
                               ": duplicate id \"" + rec.id + "\"");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void SplitFractions::validate() const {
  if (!(train > 0) || !(val > 0) || !(test > 0)) {
    throw std::invalid_argument("split fractions must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
}

SplitName SplitAssignment::at(const std::string& id) const {
  const auto it = by_id.find(id);
  if (it == by_id.end()) throw std::runtime_error("no split assignment for id \"" + id + "\"");
  return it->second;
}

std::size_t SplitAssignment::size_of(SplitName s) const {
  std::size_t n = 0;
  for (const auto& [id, split] : by_id) {
    (void)id;
    if (split == s) ++n;
  }
  return n;
}

void SplitAssignment::save(const fs::path& path) const {
  json j = json::object();
  for (const auto& [id, split] : by_id) j[id] = to_string(split);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write split assignment " + path.string());
  out << j.dump(2) << "\n";
}

SplitAssignment SplitAssignment::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open split assignment " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("split assignment " + path.string() + ": " + e.what());
  }
  SplitAssignment a;
  for (const auto& [id, name] : j.items()) {
    a.by_id[id] = split_from_string(name.get<std::string>());
  }
  return a;
}

namespace {

struct Group {
  std::string key;
  std::vector<std::size_t> record_indices;
};

struct Stratum {
  std::vector<std::size_t> group_indices;  // into the group vector
  std::size_t record_count = 0;
};

// Largest-remainder apportionment of `total` records into three targets.
std::array<std::size_t, 3> integer_targets(std::size_t total, const SplitFractions& f) {
  const double raw[3] = {f.train * static_cast<double>(total), f.val * static_cast<double>(total),
                         f.test * static_cast<double>(total)};
  std::array<std::size_t, 3> targets{};
  double remainders[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    targets[i] = static_cast<std::size_t>(std::floor(raw[i] + 1e-9));
    remainders[i] = raw[i] - static_cast<double>(targets[i]);
    assigned += targets[i];
  }
  while (assigned < total) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (remainders[i] > remainders[best]) best = i;
    }
    ++targets[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  return targets;
}

}  // namespace

SplitAssignment split(const std::vector<ManifestRecord>& records, const SplitOptions& options,
                      const WarnSink& warn) {
  options.fractions.validate();

  // Groups in first-appearance order; a group's stratum comes from its first
  // record.
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<std::pair<int, int>> group_stratum;  // (probe, label)
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ManifestRecord& rec = records[i];
    const std::string key = (!options.image_level && rec.video_id) ? *rec.video_id : rec.id;
    auto [it, inserted] = group_index.emplace(key, groups.size());
    if (inserted) {
      groups.push_back({key, {}});
      group_stratum.emplace_back(static_cast<int>(rec.probe), static_cast<int>(rec.label));
    }
    groups[it->second].record_indices.push_back(i);
  }

  std::map<std::pair<int, int>, Stratum> strata;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Stratum& s = strata[group_stratum[g]];
    s.group_indices.push_back(g);
    s.record_count += groups[g].record_indices.size();
  }

  SplitAssignment assignment;
  Rng rng(mix64(options.seed ^ 0x5f3759df));

  for (auto& [key, stratum] : strata) {
    auto& order = stratum.group_indices;
    // Fisher-Yates with the shared generator; strata iterate in sorted key
    // order, which keeps the whole assignment deterministic.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(order[i - 1], order[j]);
    }

    if (order.size() < 3) {
      std::ostringstream os;
      os << "stratum (" << to_string(static_cast<Probe>(key.first)) << ", "
         << to_string(static_cast<Label>(key.second)) << ") has only " << order.size()
         << " group(s); assigning all to train";
      warn_or_cerr(warn, os.str());
      for (const std::size_t g : order) {
        for (const std::size_t r : groups[g].record_indices) {
          assignment.by_id[records[r].id] = SplitName::train;
        }
      }
      continue;
    }

    const auto targets = integer_targets(stratum.record_count, options.fractions);
    std::array<long long, 3> deficit = {static_cast<long long>(targets[0]),
                                        static_cast<long long>(targets[1]),
                                        static_cast<long long>(targets[2])};
    for (const std::size_t g : order) {
      int best = 0;
      for (int i = 1; i < 3; ++i) {
        if (deficit[i] > deficit[best]) best = i;
      }
      deficit[best] -= static_cast<long long>(groups[g].record_indices.size());
      for (const std::size_t r : groups[g].record_indices) {
        assignment.by_id[records[r].id] = static_cast<SplitName>(best);
      }
    }
  }
  return assignment;
}

DatasetStats stats(const std::vector<ManifestRecord>& records) {
  DatasetStats s;
  s.total = records.size();
  for (const ManifestRecord& rec : records) {
    if (rec.probe == Probe::convex) ++s.convex; else ++s.linear;
    if (rec.label == Label::positive) ++s.positive; else ++s.negative;
    ++s.by_probe_label[static_cast<int>(rec.probe)][static_cast<int>(rec.label)];
    if (rec.window) ++s.with_window;
  }
  return s;
}

std::string DatasetStats::table() const {
  std::ostringstream os;
  os << std::left;
  os << std::setw(20) << "records" << total << "\n";
  os << std::setw(20) << "  convex" << convex << "\n";
  os << std::setw(20) << "  linear" << linear << "\n";
  os << std::setw(20) << "  positive" << positive << "\n";
  os << std::setw(20) << "  negative" << negative << "\n";
  for (const Probe p : {Probe::convex, Probe::linear}) {
    for (const Label l : {Label::positive, Label::negative}) {
      std::string row = std::string("  ") + to_string(p) + "/" + to_string(l);
      os << std::setw(20) << row << probe_label(p, l) << "\n";
    }
  }
  os << std::setw(20) << "window annotations" << with_window << "\n";
  return os.str();
}

const Image8& ImageCache::get(const fs::path& path) const {
  const std::string key = path.string();
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    it = entries_.emplace(key, load_image_bytes(path)).first;
  }
  return it->second;
}

SampleStream::SampleStream(const std::vector<ManifestRecord>& records,
                           const SplitAssignment& assignment, const StreamOptions& options,
                           const ImageCache* cache)
    : options_(options), cache_(cache) {
  options_.policy.validate();
  for (const ManifestRecord& rec : records) {
    const auto it = assignment.by_id.find(rec.id);
    if (it == assignment.by_id.end()) {
      throw std::runtime_error("record \"" + rec.id + "\" has no split assignment");
    }
    if (it->second != options_.split) continue;
    if (!rec.window) {
      throw std::runtime_error("record \"" + rec.id +
                               "\" has no window annotation; run estimate-window first");
    }
    order_.push_back(&rec);
  }
  Rng rng = derive_rng(options_.seed, std::string("stream-order:") + to_string(options_.split),
                       options_.epoch);
  for (std::size_t i = order_.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(order_[i - 1], order_[j]);
  }
}

std::optional<StreamItem> SampleStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const ManifestRecord& rec = *order_[cursor_++];

  GrayImage img = cache_ ? to_gray(cache_->get(rec.path)) : load_image(rec.path);

  StreamItem item;
  item.id = rec.id;
  item.label = rec.label;
  if (options_.split == SplitName::train && options_.augment) {
    Rng rng = derive_rng(options_.seed, rec.id, options_.epoch);
    item.image = augment(img, *rec.window, options_.policy, rng).image;
  } else {
    item.image = std::move(img);
  }
  return item;
}

}  // namespace fanwarp
