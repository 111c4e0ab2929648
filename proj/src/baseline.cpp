#include "fanwarp/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "fanwarp/rng.hpp"

namespace fanwarp {

using nlohmann::json;

LinearModel LinearModel::zeros(FeatureSpec spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw std::invalid_argument("feature spec dimensions must be positive");
  }
  LinearModel m;
  m.feature_spec = spec;
  m.weights.assign(static_cast<std::size_t>(spec.feature_count()) + 1, 0.0);
  return m;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  json j;
  j["feature_spec"] = {model.feature_spec.width, model.feature_spec.height};
  j["weights"] = model.weights;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model " + path.string());
  out << j.dump(2) << "\n";
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("model " + path.string() + ": " + e.what());
  }
  LinearModel m;
  const auto spec = j.at("feature_spec");
  m.feature_spec.width = spec.at(0).get<int>();
  m.feature_spec.height = spec.at(1).get<int>();
  m.weights = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(m.weights.size()) != m.feature_spec.feature_count() + 1) {
    throw std::runtime_error("model " + path.string() + ": weight count does not match feature spec");
  }
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw std::runtime_error("model " + path.string() + ": non-finite weight");
  }
  return m;
}

std::vector<double> image_features(const GrayImage& img, FeatureSpec spec) {
  const GrayImage small = downsample(img, spec.width, spec.height);
  return small.data;
}

double sigmoid(double z) {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double score_features(const LinearModel& model, const std::vector<double>& features) {
  if (features.size() + 1 != model.weights.size()) {
    throw std::invalid_argument("feature vector does not match model");
  }
  double z = model.weights.back();
  for (std::size_t i = 0; i < features.size(); ++i) z += model.weights[i] * features[i];
  return sigmoid(z);
}

double predict(const LinearModel& model, const GrayImage& img) {
  return score_features(model, image_features(img, model.feature_spec));
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

double logistic_loss(const std::vector<double>& weights,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, std::vector<double>* grad) {
  if (features.empty() || features.size() != labels.size()) {
    throw std::invalid_argument("logistic_loss: empty or mismatched batch");
  }
  const std::size_t dim = weights.size();
  if (grad) grad->assign(dim, 0.0);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (std::size_t s = 0; s < features.size(); ++s) {
    const std::vector<double>& x = features[s];
    if (x.size() + 1 != dim) throw std::invalid_argument("logistic_loss: feature size mismatch");
    double z = weights[dim - 1];
    for (std::size_t i = 0; i + 1 < dim; ++i) z += weights[i] * x[i];
    const int y = labels[s];
    loss += y == 1 ? softplus(-z) : softplus(z);
    if (grad) {
      const double err = (sigmoid(z) - static_cast<double>(y)) * inv_n;
      for (std::size_t i = 0; i + 1 < dim; ++i) (*grad)[i] += err * x[i];
      (*grad)[dim - 1] += err;
    }
  }
  return loss * inv_n;
}

LinearModel train(const std::function<SampleStream(std::uint64_t epoch)>& make_stream,
                  const TrainOptions& options) {
  if (options.learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
  if (options.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (options.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  LinearModel model = LinearModel::zeros(options.feature_spec);

  std::vector<double> grad;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    SampleStream stream = make_stream(static_cast<std::uint64_t>(epoch));
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    while (auto item = stream.next()) {
      features.push_back(image_features(item->image, options.feature_spec));
      labels.push_back(item->label == Label::positive ? 1 : 0);
    }
    if (epoch == 0) {
      const auto n_pos = std::count(labels.begin(), labels.end(), 1);
      if (labels.size() < 2 || n_pos == 0 || n_pos == static_cast<long>(labels.size())) {
        throw std::runtime_error("training stream must contain both classes");
      }
    }

    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = derive_rng(options.seed, "sgd-batches", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(order[i - 1], order[j]);
    }

    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<std::vector<double>> batch_x;
      std::vector<int> batch_y;
      batch_x.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        batch_x.push_back(features[order[k]]);
        batch_y.push_back(labels[order[k]]);
      }
      logistic_loss(model.weights, batch_x, batch_y, &grad);
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        model.weights[i] -= options.learning_rate * grad[i];
      }
    }
  }
  return model;
}

double auc_midrank(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("auc: empty or mismatched inputs");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: needs both classes");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

Metrics evaluate(const LinearModel& model, SampleStream& stream) {
  std::vector<double> scores;
  std::vector<int> labels;
  while (auto item = stream.next()) {
    scores.push_back(predict(model, item->image));
    labels.push_back(item->label == Label::positive ? 1 : 0);
  }
  if (scores.empty()) throw std::runtime_error("evaluate: empty stream");

  Metrics m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] >= 0.5 ? 1 : 0;
    if (predicted == labels[i]) ++correct;
    if (labels[i] == 1) ++m.n_pos; else ++m.n_neg;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
  if (m.n_pos > 0 && m.n_neg > 0) m.auc = auc_midrank(scores, labels);
  return m;
}

std::string metrics_json(const Metrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  if (m.auc) {
    j["auc"] = *m.auc;
  } else {
    j["auc"] = nullptr;
  }
  j["n_pos"] = m.n_pos;
  j["n_neg"] = m.n_neg;
  return j.dump(2);
}

}  // namespace fanwarp
