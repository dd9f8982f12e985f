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

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecoroute/features/classifier.hpp"
#include "ecoroute/features/complexity.hpp"
#include "ecoroute/features/embedding.hpp"
#include "ecoroute/sim/oracle.hpp"

namespace ecoroute::sim {

struct Query {
  std::string text;
  Cell cell;
};

struct StreamConfig {
  std::size_t length = 2500;
  std::vector<double> task_mix;  // empty means uniform
  std::uint64_t seed = 0;
};

// Synthesizes query text for a latent cell. The first line is a task
// instruction, the body draws words from the topic's vocabulary, and
// sentence length and syllable density are chosen so that the text's
// Flesch score lands in the bin named by cell.level.
class QueryGenerator {
 public:
  static constexpr std::size_t kMaxTopics = 3;
  static constexpr int kMaxAttempts = 500;

  QueryGenerator(std::vector<std::string> tasks, std::size_t topics,
                 features::ComplexityBinner binner);

  const std::vector<std::string>& tasks() const noexcept { return tasks_; }
  std::size_t topics() const noexcept { return topics_; }
  std::size_t levels() const noexcept { return binner_.n_bins(); }

  std::string generate(const Cell& cell, std::mt19937_64& rng) const;
  Cell sample_cell(const std::vector<double>& task_mix, std::mt19937_64& rng) const;

 private:
  // Topic words bucketed by syllable count: 1, 2 and 3+.
  using Buckets = std::array<std::vector<std::string>, 3>;

  std::string instruction(std::size_t task, std::mt19937_64& rng) const;
  std::string body(const Cell& cell, std::mt19937_64& rng) const;

  std::vector<std::string> tasks_;
  std::size_t topics_;
  features::ComplexityBinner binner_;
  std::vector<Buckets> vocab_;
};

std::vector<Query> generate_stream(const QueryGenerator& gen,
                                   const StreamConfig& config);

// Instruction slices of generated queries paired with their task labels,
// ready for train_task_classifier.
std::vector<features::LabeledEmbedding> classifier_training_set(
    const QueryGenerator& gen, const features::EmbeddingProvider& provider,
    std::size_t per_task, std::uint64_t seed);

}  // namespace ecoroute::sim
