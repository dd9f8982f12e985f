// Copyright 2026 The Ecoroute Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ecoroute/features/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"

namespace ecoroute::features {

TaskClassifier::TaskClassifier(std::vector<std::string> labels,
                               Eigen::MatrixXd weights, Eigen::VectorXd bias)
    : labels_(std::move(labels)),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (labels_.empty()) throw_invalid("TaskClassifier: no labels");
  if (static_cast<std::size_t>(weights_.rows()) != labels_.size() ||
      static_cast<std::size_t>(bias_.size()) != labels_.size()) {
    throw_invalid("TaskClassifier: W rows and b size must equal label count");
  }
  if (weights_.cols() == 0) throw_invalid("TaskClassifier: zero input dimension");
}

nlohmann::json TaskClassifier::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) row.push_back(weights_(r, c));
    w.push_back(std::move(row));
  }
  nlohmann::json b = nlohmann::json::array();
  for (Eigen::Index i = 0; i < bias_.size(); ++i) b.push_back(bias_[i]);
  return {{"labels", labels_},
          {"W", std::move(w)},
          {"b", std::move(b)},
          {"d_emb", input_dimension()}};
}

TaskClassifier TaskClassifier::from_json(const nlohmann::json& j) {
  try {
    auto labels = j.at("labels").get<std::vector<std::string>>();
    const auto d_emb = j.at("d_emb").get<std::size_t>();
    const auto& w = j.at("W");
    const auto& b = j.at("b");
    if (w.size() != labels.size() || b.size() != labels.size()) {
      throw_invalid("classifier JSON: W/b sizes do not match labels");
    }
    Eigen::MatrixXd weights(static_cast<Eigen::Index>(labels.size()),
                            static_cast<Eigen::Index>(d_emb));
    Eigen::VectorXd bias(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (w[r].size() != d_emb) throw_invalid("classifier JSON: row width != d_emb");
      for (std::size_t c = 0; c < d_emb; ++c) {
        weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            w[r][c].get<double>();
      }
      bias[static_cast<Eigen::Index>(r)] = b[r].get<double>();
    }
    return TaskClassifier(std::move(labels), std::move(weights), std::move(bias));
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("classifier JSON: ") + e.what());
  }
}

void TaskClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw_invalid("cannot write classifier to " + path.string());
  out << to_json().dump() << '\n';
}

TaskClassifier TaskClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_invalid("cannot read classifier from " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid("classifier file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - max).exp().matrix();
  return p / p.sum();
}

Classification classify_task(const TaskClassifier& clf,
                             const EmbeddingVector& e) {
  if (e.dimension() != clf.input_dimension()) {
    throw_invalid("classify_task: embedding dimension " +
                  std::to_string(e.dimension()) + " != classifier dimension " +
                  std::to_string(clf.input_dimension()));
  }
  Classification out;
  out.probabilities = softmax(clf.weights() * e.values() + clf.bias());
  for (Eigen::Index i = 1; i < out.probabilities.size(); ++i) {
    if (out.probabilities[i] >
        out.probabilities[static_cast<Eigen::Index>(out.label_index)]) {
      out.label_index = static_cast<std::size_t>(i);
    }
  }
  out.label = clf.labels()[out.label_index];
  return out;
}

LossAndGradient cross_entropy_loss(const Eigen::MatrixXd& weights,
                                   const Eigen::VectorXd& bias,
                                   const Eigen::MatrixXd& inputs,
                                   const std::vector<std::size_t>& targets,
                                   double weight_decay) {
  const auto n = inputs.cols();
  LossAndGradient out;
  out.grad_weights = weight_decay * weights;
  out.grad_bias = Eigen::VectorXd::Zero(bias.size());
  out.loss = 0.5 * weight_decay * weights.squaredNorm();
  if (n == 0) return out;

  Eigen::MatrixXd logits = weights * inputs;
  logits.colwise() += bias;
  Eigen::MatrixXd residual(logits.rows(), n);
  double ce = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& col = logits.col(i);
    const double max = col.maxCoeff();
    const double log_z = max + std::log((col.array() - max).exp().sum());
    const auto target = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]);
    ce += log_z - col[target];
    residual.col(i) = (col.array() - log_z).exp().matrix();
    residual(target, i) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss += ce * inv_n;
  out.grad_weights += inv_n * residual * inputs.transpose();
  out.grad_bias += inv_n * residual.rowwise().sum();
  return out;
}

double macro_f1(const std::vector<std::size_t>& truth,
                const std::vector<std::size_t>& predicted,
                std::size_t num_labels) {
  std::vector<double> tp(num_labels), fp(num_labels), fn(num_labels);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      tp[truth[i]] += 1;
    } else {
      fn[truth[i]] += 1;
      fp[predicted[i]] += 1;
    }
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < num_labels; ++k) {
    if (tp[k] + fp[k] + fn[k] == 0) continue;
    sum += 2 * tp[k] / (2 * tp[k] + fp[k] + fn[k]);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

TrainedClassifier train_task_classifier(
    const std::vector<LabeledEmbedding>& pairs, const TrainingConfig& config) {
  if (config.iterations < 0 || !(config.learning_rate > 0) ||
      config.weight_decay < 0 || config.validation_fraction < 0 ||
      config.validation_fraction >= 1) {
    throw_invalid("train_task_classifier: invalid training config");
  }
  std::set<std::string> distinct;
  for (const auto& p : pairs) distinct.insert(p.label);
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kDegenerateTraining,
                "train_task_classifier: need at least two distinct labels");
  }
  const std::size_t dim = pairs.front().embedding.dimension();
  for (const auto& p : pairs) {
    if (p.embedding.dimension() != dim) {
      throw_invalid("train_task_classifier: embeddings differ in dimension");
    }
  }

  std::vector<std::string> labels = config.labels;
  if (labels.empty()) {
    labels.assign(distinct.begin(), distinct.end());
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!index.emplace(labels[i], i).second) {
      throw_invalid("train_task_classifier: duplicate label " + labels[i]);
    }
  }
  for (const auto& l : distinct) {
    if (!index.contains(l)) {
      throw_invalid("train_task_classifier: label '" + l +
                    "' missing from configured label order");
    }
  }

  // Stratified split: within each label, a seeded shuffle decides which
  // samples are held out. Labels with a single sample stay in training.
  std::mt19937_64 rng(config.seed);
  std::vector<std::vector<std::size_t>> by_label(labels.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_label[index.at(pairs[i].label)].push_back(i);
  }
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& members : by_label) {
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t hold = 0;
    if (members.size() >= 2 && config.validation_fraction > 0) {
      hold = static_cast<std::size_t>(
          std::ceil(config.validation_fraction * static_cast<double>(members.size())));
      hold = std::clamp<std::size_t>(hold, 1, members.size() - 1);
    }
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(hold));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(hold), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(dim),
                         static_cast<Eigen::Index>(train_idx.size()));
  std::vector<std::size_t> targets;
  targets.reserve(train_idx.size());
  for (std::size_t c = 0; c < train_idx.size(); ++c) {
    inputs.col(static_cast<Eigen::Index>(c)) = pairs[train_idx[c]].embedding.values();
    targets.push_back(index.at(pairs[train_idx[c]].label));
  }

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size()));
  double loss = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    auto step = cross_entropy_loss(weights, bias, inputs, targets, config.weight_decay);
    loss = step.loss;
    weights -= config.learning_rate * step.grad_weights;
    bias -= config.learning_rate * step.grad_bias;
  }
  loss = cross_entropy_loss(weights, bias, inputs, targets, config.weight_decay).loss;

  TrainedClassifier out{TaskClassifier(labels, std::move(weights), std::move(bias)), {}};
  out.report.train_size = train_idx.size();
  out.report.validation_size = val_idx.size();
  out.report.final_loss = loss;
  if (!val_idx.empty()) {
    std::vector<std::size_t> truth, predicted;
    for (const auto i : val_idx) {
      truth.push_back(index.at(pairs[i].label));
      predicted.push_back(classify_task(out.classifier, pairs[i].embedding).label_index);
    }
    out.report.validation_macro_f1 = macro_f1(truth, predicted, labels.size());
  }
  return out;
}

}  // namespace ecoroute::features
