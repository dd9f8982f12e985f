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
#include <cstdint>
#include <vector>

#include "ecoroute/features/embedding.hpp"

namespace ecoroute::features {

// Online K-means over embeddings with cosine assignment.
//
// Seeding: the first K mutually distinct embeddings (pairwise cosine below
// kDistinctCosine) become the initial centroids, each with count 1. Until K
// centroids exist, assign() returns the nearest existing centroid.
class ClusterModel {
 public:
  static constexpr double kDistinctCosine = 0.999;

  explicit ClusterModel(std::size_t k);
  // Explicit state, e.g. restored from a snapshot. Must hold exactly k
  // centroids of equal dimension.
  ClusterModel(std::vector<EmbeddingVector> centroids,
               std::vector<std::uint64_t> counts);

  std::size_t k() const noexcept { return k_; }
  bool ready() const noexcept { return centroids_.size() == k_; }
  std::size_t seeded() const noexcept { return centroids_.size(); }
  const std::vector<EmbeddingVector>& centroids() const noexcept { return centroids_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total_count() const noexcept;

  // Argmax cosine similarity; ties go to the lowest index.
  // Errors: zero vector -> kInvalidInput; no centroid yet -> kNotReady.
  std::size_t assign(const EmbeddingVector& e) const;

  // mu_c <- mu_c + (e - mu_c) / (N_c + 1); N_c <- N_c + 1.
  void update(const EmbeddingVector& e, std::size_t c);

  // Seeds a new centroid from `e` if fewer than K exist and `e` is distinct
  // from every existing centroid; otherwise assigns and updates. Returns the
  // cluster index the point was absorbed into. The assignment uses the
  // centroids as they were before the point was absorbed.
  std::size_t observe(const EmbeddingVector& e);

  // observe() without mutation: the index observe() would return.
  std::size_t peek(const EmbeddingVector& e) const;

 private:
  bool is_distinct(const EmbeddingVector& e) const;

  std::size_t k_;
  std::vector<EmbeddingVector> centroids_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace ecoroute::features
