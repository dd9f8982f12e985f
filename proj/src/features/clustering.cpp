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

#include "ecoroute/features/clustering.hpp"

#include <numeric>

#include "ecoroute/error.hpp"

namespace ecoroute::features {

ClusterModel::ClusterModel(std::size_t k) : k_(k) {
  if (k_ == 0) throw_invalid("ClusterModel: K must be positive");
  centroids_.reserve(k_);
  counts_.reserve(k_);
}

ClusterModel::ClusterModel(std::vector<EmbeddingVector> centroids,
                           std::vector<std::uint64_t> counts)
    : k_(centroids.size()),
      centroids_(std::move(centroids)),
      counts_(std::move(counts)) {
  if (k_ == 0) throw_invalid("ClusterModel: K must be positive");
  if (counts_.size() != k_) throw_invalid("ClusterModel: counts size != K");
  for (const auto& c : centroids_) {
    if (c.dimension() != centroids_.front().dimension()) {
      throw_invalid("ClusterModel: centroid dimensions differ");
    }
  }
}

std::uint64_t ClusterModel::total_count() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::size_t ClusterModel::assign(const EmbeddingVector& e) const {
  if (centroids_.empty()) {
    throw Error(ErrorCode::kNotReady, "assign_cluster: no centroids seeded yet");
  }
  if (e.is_zero()) throw_invalid("assign_cluster: zero embedding");
  std::size_t best = 0;
  double best_sim = cosine_similarity(e, centroids_[0]);
  for (std::size_t c = 1; c < centroids_.size(); ++c) {
    const double sim = cosine_similarity(e, centroids_[c]);
    if (sim > best_sim) {
      best_sim = sim;
      best = c;
    }
  }
  return best;
}

void ClusterModel::update(const EmbeddingVector& e, std::size_t c) {
  if (c >= centroids_.size()) {
    throw_invalid("update_cluster: cluster index " + std::to_string(c) +
                  " out of range");
  }
  if (e.dimension() != centroids_[c].dimension()) {
    throw_invalid("update_cluster: dimension mismatch");
  }
  const double rate = 1.0 / (static_cast<double>(counts_[c]) + 1.0);
  const Eigen::VectorXd& mu = centroids_[c].values();
  centroids_[c] = EmbeddingVector(mu + rate * (e.values() - mu));
  ++counts_[c];
}

bool ClusterModel::is_distinct(const EmbeddingVector& e) const {
  for (const auto& c : centroids_) {
    if (cosine_similarity(e, c) >= kDistinctCosine) return false;
  }
  return true;
}

std::size_t ClusterModel::peek(const EmbeddingVector& e) const {
  if (e.is_zero()) throw_invalid("assign_cluster: zero embedding");
  if (!centroids_.empty() && e.dimension() != centroids_.front().dimension()) {
    throw_invalid("assign_cluster: dimension mismatch");
  }
  if (!ready() && is_distinct(e)) return centroids_.size();
  return assign(e);
}

std::size_t ClusterModel::observe(const EmbeddingVector& e) {
  const std::size_t c = peek(e);
  if (c == centroids_.size()) {
    centroids_.push_back(e);
    counts_.push_back(1);
    return c;
  }
  update(e, c);
  return c;
}

}  // namespace ecoroute::features
