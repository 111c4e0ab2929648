#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "fanwarp/dataset.hpp"
#include "fanwarp/raster.hpp"

namespace fanwarp {

struct FeatureSpec {
  int width = 32;
  int height = 32;

  int feature_count() const { return width * height; }
};

// Logistic model on downsampled pixels. weights has feature_count() + 1
// entries, bias last.
struct LinearModel {
  FeatureSpec feature_spec;
  std::vector<double> weights;

  static LinearModel zeros(FeatureSpec spec);
};

void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

// Downsampled intensities, row-major, no bias term.
std::vector<double> image_features(const GrayImage& img, FeatureSpec spec);

double sigmoid(double z);
double score_features(const LinearModel& model, const std::vector<double>& features);
double predict(const LinearModel& model, const GrayImage& img);

// Mean logistic loss over the batch; fills grad (size F+1) when non-null.
// labels are 0/1.
double logistic_loss(const std::vector<double>& weights,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, std::vector<double>* grad);

struct TrainOptions {
  int epochs = 10;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  int batch_size = 32;
  FeatureSpec feature_spec;
};

// Mini-batch SGD from zero weights. Each epoch materializes the stream,
// shuffles sample order with a generator derived from (seed, epoch), and
// applies one step per batch. Deterministic given the stream and the seed.
LinearModel train(const std::function<SampleStream(std::uint64_t epoch)>& make_stream,
                  const TrainOptions& options);

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when the stream is single-class
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

// Mann-Whitney AUC with midranks for ties. labels are 0/1.
double auc_midrank(const std::vector<double>& scores, const std::vector<int>& labels);

// Accuracy at threshold 0.5 (score >= 0.5 predicts positive) plus AUC.
Metrics evaluate(const LinearModel& model, SampleStream& stream);

std::string metrics_json(const Metrics& m);

}  // namespace fanwarp
