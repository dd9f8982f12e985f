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

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "ecoroute/features/classifier.hpp"
#include "ecoroute/features/clustering.hpp"
#include "ecoroute/features/complexity.hpp"
#include "ecoroute/features/embedding.hpp"

namespace ecoroute::features {

// Which one-hot blocks enter the context vector. The bias entry is always
// present, so FeatureSet::none() yields a 1-dimensional, context-free vector.
struct FeatureSet {
  bool task = true;
  bool cluster = true;
  bool complexity = true;

  static constexpr FeatureSet full() { return {true, true, true}; }
  static constexpr FeatureSet none() { return {false, false, false}; }

  // "none", "task", "cluster", "complexity", "task+cluster",
  // "task+complexity", "cluster+complexity", "full".
  static FeatureSet parse(std::string_view name);
  std::string name() const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct ContextDims {
  std::size_t tasks = 0;
  std::size_t clusters = 0;
  std::size_t bins = 0;
};

// Block layout of x = [onehot(task) | onehot(cluster) | onehot(bin) | 1].
class ContextLayout {
 public:
  ContextLayout(ContextDims dims, FeatureSet features = FeatureSet::full());

  const ContextDims& dims() const noexcept { return dims_; }
  const FeatureSet& features() const noexcept { return features_; }
  std::size_t dimension() const noexcept;

 private:
  ContextDims dims_;
  FeatureSet features_;
};

class ContextVector {
 public:
  ContextVector() = default;
  explicit ContextVector(Eigen::VectorXd values) : values_(std::move(values)) {}

  const Eigen::VectorXd& values() const noexcept { return values_; }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(values_.size());
  }

  friend bool operator==(const ContextVector& a, const ContextVector& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

// Concatenated one-hot encoding plus trailing bias. Indices of disabled
// blocks are ignored; enabled ones must be within their block size.
ContextVector build_context(std::size_t task, std::size_t cluster,
                            std::size_t bin, const ContextLayout& layout);

struct FeatureBreakdown {
  std::size_t task = 0;
  std::string task_label;
  Eigen::VectorXd task_probabilities;
  std::size_t cluster = 0;
  double flesch_raw = 0.0;
  double flesch = 0.0;
  std::size_t complexity_bin = 0;
};

// Wall-clock milliseconds per stage. task_ms includes the instruction
// embedding, cluster_ms the full-text embedding.
struct StageTimings {
  double task_ms = 0.0;
  double cluster_ms = 0.0;
  double complexity_ms = 0.0;
  double build_ms = 0.0;

  double total_ms() const noexcept {
    return task_ms + cluster_ms + complexity_ms + build_ms;
  }
};

struct GeneratedContext {
  ContextVector x;
  FeatureBreakdown features;
  StageTimings timings;
};

// Everything that can be computed without touching shared cluster state.
struct ExtractedFeatures {
  EmbeddingVector full_embedding;
  Classification task;
  FleschResult flesch;
  std::size_t complexity_bin = 0;
  StageTimings timings;
};

// Query text -> context vector.
//
// extract() is safe for concurrent callers. Cluster assignment and update
// mutate the shared ClusterModel and go through a single writer; readers
// of cluster_snapshot() see a consistent copy.
class ContextPipeline {
 public:
  ContextPipeline(std::shared_ptr<const EmbeddingProvider> provider,
                  TaskClassifier classifier, std::size_t clusters,
                  ComplexityBinner binner,
                  FeatureSet features = FeatureSet::full());

  const ContextLayout& layout() const noexcept { return layout_; }
  const TaskClassifier& classifier() const noexcept { return classifier_; }
  const ComplexityBinner& binner() const noexcept { return binner_; }
  const EmbeddingProvider& provider() const noexcept { return *provider_; }

  ExtractedFeatures extract(std::string_view text) const;

  // Assigns the cluster with the current centroids, then (unless frozen)
  // absorbs the embedding into that cluster.
  GeneratedContext finalize(ExtractedFeatures extracted, bool update_clusters);

  GeneratedContext generate(std::string_view text, bool update_clusters = true);

  ClusterModel cluster_snapshot() const;
  void restore_clusters(ClusterModel model);

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
  TaskClassifier classifier_;
  ComplexityBinner binner_;
  ContextLayout layout_;

  mutable std::mutex cluster_mu_;
  ClusterModel clusters_;
};

}  // namespace ecoroute::features
