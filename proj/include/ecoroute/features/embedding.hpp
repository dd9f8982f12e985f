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
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Core>

namespace ecoroute::features {

// Dense embedding with its Euclidean norm cached at construction.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  double norm() const noexcept { return norm_; }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(values_.size());
  }
  bool is_zero() const noexcept { return norm_ == 0.0; }

  friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
  double norm_ = 0.0;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Source of sentence embeddings. Implementations receive text that has
// already been truncated to max_tokens() words.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t max_tokens() const = 0;
  virtual std::string name() const = 0;

 protected:
  friend EmbeddingVector embed(std::string_view, const EmbeddingProvider&);
  virtual EmbeddingVector embed_truncated(std::string_view text) const = 0;
};

// Trims, rejects empty text, truncates to the provider's token limit and
// embeds. Provider failures surface as kProviderError with the cause.
EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider);

// Signed feature hashing over lower-cased unigrams and bigrams, L2-normalized.
// Deterministic across runs and platforms.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDimension = 64;
  static constexpr std::size_t kDefaultMaxTokens = 256;

  explicit HashingEmbedder(std::size_t dimension = kDefaultDimension,
                           std::size_t max_tokens = kDefaultMaxTokens);

  std::size_t dimension() const override { return dimension_; }
  std::size_t max_tokens() const override { return max_tokens_; }
  std::string name() const override { return "hashing"; }

 protected:
  EmbeddingVector embed_truncated(std::string_view text) const override;

 private:
  std::size_t dimension_;
  std::size_t max_tokens_;
};

// Embeddings computed out of process (e.g. by a sentence-transformer) and
// shipped as JSON Lines: {"id": string, "vector": [float...]} per line.
// Lookups try the exact text first, then its text_fingerprint().
class PrecomputedEmbeddings final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultMaxTokens = 256;

  static PrecomputedEmbeddings load(const std::filesystem::path& path,
                                    std::size_t max_tokens = kDefaultMaxTokens);
  static PrecomputedEmbeddings parse(std::string_view jsonl,
                                     std::size_t max_tokens = kDefaultMaxTokens);

  std::size_t dimension() const override { return dimension_; }
  std::size_t max_tokens() const override { return max_tokens_; }
  std::string name() const override { return "precomputed"; }
  std::size_t size() const noexcept { return vectors_.size(); }

 protected:
  EmbeddingVector embed_truncated(std::string_view text) const override;

 private:
  PrecomputedEmbeddings() = default;

  std::unordered_map<std::string, EmbeddingVector> vectors_;
  std::size_t dimension_ = 0;
  std::size_t max_tokens_ = kDefaultMaxTokens;
};

}  // namespace ecoroute::features
