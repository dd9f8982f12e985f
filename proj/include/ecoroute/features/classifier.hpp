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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "ecoroute/features/embedding.hpp"

namespace ecoroute::features {

// Multinomial logistic regression over instruction embeddings:
// p(label | e) = softmax(W e + b).
class TaskClassifier {
 public:
  TaskClassifier(std::vector<std::string> labels, Eigen::MatrixXd weights,
                 Eigen::VectorXd bias);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& bias() const noexcept { return bias_; }
  std::size_t num_labels() const noexcept { return labels_.size(); }
  std::size_t input_dimension() const noexcept {
    return static_cast<std::size_t>(weights_.cols());
  }

  nlohmann::json to_json() const;
  static TaskClassifier from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TaskClassifier load(const std::filesystem::path& path);

 private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd weights_;  // num_labels x input_dimension
  Eigen::VectorXd bias_;
};

struct Classification {
  std::size_t label_index = 0;
  std::string label;
  Eigen::VectorXd probabilities;
};

// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Argmax of the softmax; ties resolve to the lowest label index.
Classification classify_task(const TaskClassifier& clf,
                             const EmbeddingVector& e);

struct LabeledEmbedding {
  EmbeddingVector embedding;
  std::string label;
};

struct TrainingConfig {
  double learning_rate = 0.1;
  int iterations = 500;
  double weight_decay = 1e-4;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  // Label order of the trained model. Empty means sorted unique labels.
  std::vector<std::string> labels;
};

struct TrainingReport {
  // Macro-F1 on the stratified held-out split; empty when no sample could be
  // held out.
  std::optional<double> validation_macro_f1;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  double final_loss = 0.0;
};

struct TrainedClassifier {
  TaskClassifier classifier;
  TrainingReport report;
};

// Full-batch gradient descent on softmax cross-entropy with L2 decay on W.
// Deterministic given config.seed (the seed drives the train/validation
// split; weights start at zero).
TrainedClassifier train_task_classifier(
    const std::vector<LabeledEmbedding>& pairs, const TrainingConfig& config);

// Mean cross-entropy plus (weight_decay / 2) * ||W||_F^2 and its gradient.
// `inputs` holds one sample per column; `targets` are label indices.
struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_bias;
};
LossAndGradient cross_entropy_loss(const Eigen::MatrixXd& weights,
                                   const Eigen::VectorXd& bias,
                                   const Eigen::MatrixXd& inputs,
                                   const std::vector<std::size_t>& targets,
                                   double weight_decay);

// Macro-averaged F1 over labels that occur in either `truth` or `predicted`.
double macro_f1(const std::vector<std::size_t>& truth,
                const std::vector<std::size_t>& predicted,
                std::size_t num_labels);

}  // namespace ecoroute::features
