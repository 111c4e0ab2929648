// fanwarp: viewing-window geometry, projective augmentation, and the
// phantom/baseline pipeline around it. Every subcommand prints a JSON result
// to stdout and keeps diagnostics on stderr. Exit codes: 0 success, 1 usage
// error, 2 data error.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fanwarp/augment.hpp"
#include "fanwarp/baseline.hpp"
#include "fanwarp/dataset.hpp"
#include "fanwarp/geometry.hpp"
#include "fanwarp/image_io.hpp"
#include "fanwarp/phantom.hpp"
#include "fanwarp/windowfit.hpp"

namespace {

using nlohmann::json;
using namespace fanwarp;

std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t flag_value) {
  if (cmd->count("--seed") > 0) return flag_value;
  if (const char* env = std::getenv("FANWARP_SEED")) {
    try {
      std::size_t consumed = 0;
      const unsigned long long v = std::stoull(env, &consumed);
      if (consumed == std::string(env).size()) return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("--seed", "FANWARP_SEED is not a valid unsigned integer");
  }
  throw CLI::RequiredError("--seed (or the FANWARP_SEED environment variable)");
}

SplitFractions parse_fractions(const std::string& text) {
  SplitFractions f;
  double a = 0, b = 0, c = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &a, &b, &c, &extra) != 3) {
    throw CLI::ValidationError("--fractions", "expected three comma-separated numbers");
  }
  f.train = a;
  f.val = b;
  f.test = c;
  f.validate();
  return f;
}

void emit(const json& j) {
  std::cout << j.dump(2) << "\n";
}

json window_json(const ViewingWindow& w) {
  return json(window_annotation(w));
}

struct SynthArgs {
  int n = 0;
  double convex_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
};

struct EstimateArgs {
  std::string image;
  double threshold = kDefaultWindowThreshold;
};

struct SplitArgs {
  std::string manifest;
  std::uint64_t seed = 0;
  std::string fractions = "0.72,0.14,0.14";
  std::string out;
  bool image_level = false;
};

struct StatsArgs {
  std::string manifest;
};

struct AugmentArgs {
  std::string image;
  std::vector<double> window;
  std::string manifest;
  std::string id;
  std::string probe;
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::string out;
  int workers = 1;
};

struct TrainArgs {
  std::string manifest;
  std::string splits;
  std::string policy;
  std::uint64_t seed = 0;
  int epochs = 10;
  double lr = 0.5;
  std::string out;
  bool no_linear_transform = false;
  bool no_augment = false;
  int batch_size = 32;
  int feature_size = 32;
};

struct EvaluateArgs {
  std::string manifest;
  std::string splits;
  std::string model;
  std::string split = "test";
};

void run_synth(const SynthArgs& args) {
  PhantomOptions options;
  options.count = args.n;
  options.convex_fraction = args.convex_fraction;
  options.seed = args.seed;
  options.out_dir = args.out;
  options.workers = args.workers;
  const PhantomSummary s = generate_phantoms(options);
  json j;
  j["total"] = s.total;
  j["convex"] = s.convex;
  j["linear"] = s.linear;
  j["positive"] = s.positive;
  j["negative"] = s.negative;
  j["manifest"] = s.manifest_path.string();
  emit(j);
}

void run_estimate_window(const EstimateArgs& args) {
  const GrayImage img = load_image(args.image);
  const ViewingWindow w = estimate_window(img, args.threshold);
  json j;
  j["window"] = window_json(w);
  j["probe"] = to_string(w.probe);
  emit(j);
}

void run_split(const SplitArgs& args) {
  const auto records = load_manifest(args.manifest);
  SplitOptions options;
  options.fractions = parse_fractions(args.fractions);
  options.seed = args.seed;
  options.image_level = args.image_level;
  const SplitAssignment assignment = split(records, options);
  assignment.save(args.out);
  json j;
  j["train"] = assignment.size_of(SplitName::train);
  j["val"] = assignment.size_of(SplitName::val);
  j["test"] = assignment.size_of(SplitName::test);
  j["out"] = args.out;
  emit(j);
}

void run_stats(const StatsArgs& args) {
  const auto records = load_manifest(args.manifest);
  const DatasetStats s = stats(records);
  std::cerr << s.table();
  json j;
  j["total"] = s.total;
  j["convex"] = s.convex;
  j["linear"] = s.linear;
  j["positive"] = s.positive;
  j["negative"] = s.negative;
  json cross = json::object();
  for (const Probe p : {Probe::convex, Probe::linear}) {
    for (const Label l : {Label::positive, Label::negative}) {
      cross[std::string(to_string(p)) + "_" + to_string(l)] = s.probe_label(p, l);
    }
  }
  j["by_probe_label"] = cross;
  j["window_annotations"] = s.with_window;
  emit(j);
}

void run_augment(const AugmentArgs& args) {
  const bool manifest_mode = !args.manifest.empty() || !args.id.empty();
  if (manifest_mode && (args.manifest.empty() || args.id.empty())) {
    throw CLI::ValidationError("--manifest/--id", "both are required together");
  }
  if (manifest_mode == !args.window.empty()) {
    throw CLI::ValidationError("--window", "pass either --window or --manifest with --id");
  }

  const AugmentPolicy policy = [&] {
    AugmentPolicy p = load_policy(args.policy);
    p.warp_workers = args.workers;
    return p;
  }();

  GrayImage img;
  ViewingWindow window;
  std::string item_id;
  if (manifest_mode) {
    const auto records = load_manifest(args.manifest);
    const auto it = std::find_if(records.begin(), records.end(),
                                 [&](const ManifestRecord& r) { return r.id == args.id; });
    if (it == records.end()) {
      throw std::runtime_error("id \"" + args.id + "\" not found in " + args.manifest);
    }
    if (!it->window) {
      throw std::runtime_error("record \"" + args.id + "\" has no window annotation");
    }
    img = load_image(it->path);
    window = *it->window;
    item_id = it->id;
  } else {
    img = load_image(args.image);
    std::array<double, 8> a{};
    std::copy(args.window.begin(), args.window.end(), a.begin());
    Probe probe;
    if (!args.probe.empty()) {
      probe = probe_from_string(args.probe);
    } else {
      // Rectangular annotations are linear-probe captures, flared ones convex.
      probe = (std::abs(a[0] - a[2]) <= 1.0 && std::abs(a[4] - a[6]) <= 1.0) ? Probe::linear
                                                                             : Probe::convex;
    }
    window = window_from_annotation(a, probe);
    item_id = std::filesystem::path(args.image).filename().string();
  }

  Rng rng = derive_rng(args.seed, item_id, args.epoch);
  const AugmentResult result = augment(img, window, policy, rng);
  save_image(result.image, args.out);

  json j;
  j["out"] = args.out;
  j["probe"] = to_string(window.probe);
  j["slope"] = result.slope;
  j["window"] = window_json(result.window);
  j["homography"] = result.h.m;
  emit(j);
}

void run_train(const TrainArgs& args) {
  const auto records = load_manifest(args.manifest);
  const SplitAssignment assignment = SplitAssignment::load(args.splits);
  AugmentPolicy policy = load_policy(args.policy);
  if (args.no_linear_transform) policy.apply_linear_transform = false;

  ImageCache cache;
  const auto make_stream = [&](std::uint64_t epoch) {
    StreamOptions options;
    options.split = SplitName::train;
    options.policy = policy;
    options.seed = args.seed;
    options.epoch = epoch;
    options.augment = !args.no_augment;
    return SampleStream(records, assignment, options, &cache);
  };

  TrainOptions train_options;
  train_options.epochs = args.epochs;
  train_options.learning_rate = args.lr;
  train_options.seed = args.seed;
  train_options.batch_size = args.batch_size;
  train_options.feature_spec = FeatureSpec{args.feature_size, args.feature_size};
  const LinearModel model = train(make_stream, train_options);
  save_model(model, args.out);

  json j;
  j["model"] = args.out;
  j["epochs"] = args.epochs;
  j["train_samples"] = make_stream(0).size();
  j["feature_spec"] = {model.feature_spec.width, model.feature_spec.height};
  j["augment"] = !args.no_augment;
  j["linear_transform"] = policy.apply_linear_transform;
  emit(j);
}

void run_evaluate(const EvaluateArgs& args) {
  const auto records = load_manifest(args.manifest);
  const SplitAssignment assignment = SplitAssignment::load(args.splits);
  const LinearModel model = load_model(args.model);

  StreamOptions options;
  options.split = split_from_string(args.split);
  options.augment = false;
  SampleStream stream(records, assignment, options);
  const Metrics m = evaluate(model, stream);
  std::cout << metrics_json(m) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viewing-window estimation, projective ultrasound augmentation, and a desk-scale "
               "training pipeline"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic phantom corpus");
  synth->add_option("--n", synth_args.n, "Number of images")->required();
  synth->add_option("--convex-fraction", synth_args.convex_fraction, "Fraction of convex-probe images")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_args.seed, "Generator seed");
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->add_option("--workers", synth_args.workers, "Render threads")->check(CLI::PositiveNumber);

  EstimateArgs estimate_args;
  auto* estimate = app.add_subcommand("estimate-window", "Estimate viewing-window corners from pixels");
  estimate->add_option("--image", estimate_args.image, "Input image (PNG or PGM)")->required();
  estimate->add_option("--threshold", estimate_args.threshold, "Binarization threshold");

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test assignment");
  split_cmd->add_option("--manifest", split_args.manifest, "Manifest (JSON lines)")->required();
  split_cmd->add_option("--seed", split_args.seed, "Shuffle seed");
  split_cmd->add_option("--fractions", split_args.fractions, "train,val,test fractions");
  split_cmd->add_option("--out", split_args.out, "Assignment output path")->required();
  split_cmd->add_flag("--image-level", split_args.image_level,
                      "Ignore video_id grouping and split at the image level");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Manifest summary counts");
  stats_cmd->add_option("--manifest", stats_args.manifest, "Manifest (JSON lines)")->required();

  AugmentArgs augment_args;
  auto* augment_cmd = app.add_subcommand("augment", "Augment a single image");
  augment_cmd->add_option("--image", augment_args.image, "Input image");
  augment_cmd->add_option("--window", augment_args.window,
                          "Window annotation: p1lx,p1ly,p2lx,p2ly,p1rx,p1ry,p2rx,p2ry")
      ->expected(8)
      ->delimiter(',');
  augment_cmd->add_option("--manifest", augment_args.manifest, "Manifest to take the record from");
  augment_cmd->add_option("--id", augment_args.id, "Record id within --manifest");
  augment_cmd->add_option("--probe", augment_args.probe, "Override probe kind (convex|linear)");
  augment_cmd->add_option("--policy", augment_args.policy, "Policy file")->required();
  augment_cmd->add_option("--seed", augment_args.seed, "Augmentation seed");
  augment_cmd->add_option("--epoch", augment_args.epoch, "Epoch index");
  augment_cmd->add_option("--out", augment_args.out, "Output image path")->required();
  augment_cmd->add_option("--workers", augment_args.workers, "Warp threads")->check(CLI::PositiveNumber);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train-baseline", "Train the logistic baseline");
  train_cmd->add_option("--manifest", train_args.manifest, "Manifest (JSON lines)")->required();
  train_cmd->add_option("--splits", train_args.splits, "Split assignment JSON")->required();
  train_cmd->add_option("--policy", train_args.policy, "Augmentation policy file")->required();
  train_cmd->add_option("--seed", train_args.seed, "Stream and SGD seed");
  train_cmd->add_option("--epochs", train_args.epochs, "Training epochs")->required();
  train_cmd->add_option("--lr", train_args.lr, "Learning rate")->required();
  train_cmd->add_option("--out", train_args.out, "Model output path")->required();
  train_cmd->add_flag("--no-linear-transform", train_args.no_linear_transform,
                      "Pass linear-probe images through untransformed");
  train_cmd->add_flag("--no-augment", train_args.no_augment, "Disable augmentation entirely");
  train_cmd->add_option("--batch-size", train_args.batch_size, "SGD batch size")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--feature-size", train_args.feature_size, "Downsample size for features")
      ->check(CLI::PositiveNumber);

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a model on a split");
  evaluate_cmd->add_option("--manifest", evaluate_args.manifest, "Manifest (JSON lines)")->required();
  evaluate_cmd->add_option("--splits", evaluate_args.splits, "Split assignment JSON")->required();
  evaluate_cmd->add_option("--model", evaluate_args.model, "Model JSON")->required();
  evaluate_cmd->add_option("--split", evaluate_args.split, "Split to evaluate (train|val|test)");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      synth_args.seed = resolve_seed(synth, synth_args.seed);
      run_synth(synth_args);
    } else if (estimate->parsed()) {
      run_estimate_window(estimate_args);
    } else if (split_cmd->parsed()) {
      split_args.seed = resolve_seed(split_cmd, split_args.seed);
      run_split(split_args);
    } else if (stats_cmd->parsed()) {
      run_stats(stats_args);
    } else if (augment_cmd->parsed()) {
      augment_args.seed = resolve_seed(augment_cmd, augment_args.seed);
      run_augment(augment_args);
    } else if (train_cmd->parsed()) {
      train_args.seed = resolve_seed(train_cmd, train_args.seed);
      run_train(train_args);
    } else if (evaluate_cmd->parsed()) {
      run_evaluate(evaluate_args);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
