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

#include "ecoroute/sim/stream.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "ecoroute/error.hpp"
#include "ecoroute/features/text.hpp"

namespace ecoroute::sim {
namespace {

const std::map<std::string, std::vector<std::string>>& instruction_templates() {
  static const std::map<std::string, std::vector<std::string>> kTemplates = {
      {"qa",
       {"Answer the following question.",
        "Please answer this question in a few words.",
        "Question for you: give the correct answer.",
        "Read the question and answer it."}},
      {"completion",
       {"Complete the following text.", "Continue the passage below.",
        "Finish this sentence in a natural way.",
        "Write the next part of the text."}},
      {"commonsense",
       {"Choose the most plausible option.",
        "Which option makes the most sense?",
        "Pick the likely outcome using common sense.",
        "Select the most reasonable choice."}},
      {"math",
       {"Solve the math problem and give the number.",
        "Calculate the result of this problem.",
        "Compute the answer to the equation.",
        "Work out the sum and state the number."}},
      {"summarization",
       {"Summarize the passage below.", "Write a short summary of this text.",
        "Condense the following article into one line.",
        "Give a brief summary of the passage."}},
  };
  return kTemplates;
}

constexpr const char* kTopicWords[QueryGenerator::kMaxTopics] = {
    "heart blood bone skin lung drug care pain cell nurse sleep health wound "
    "cure dose clinic doctor patient fever treatment vitamin hospital "
    "medicine surgery therapy infection diagnosis symptom immune protein "
    "antibiotic cardiology physician nutrition vaccination anatomy disease "
    "recovery pharmacy",
    "bank cash loan debt stock bond fund rate tax price cost trade wage rent "
    "market budget credit dollar profit invest savings income interest "
    "currency economy inflation dividend portfolio mortgage revenue "
    "liquidity investment accounting financial security valuation monetary",
    "ball team goal race game match coach score win play field court run "
    "kick player soccer tennis runner season trophy stadium athlete champion "
    "tournament olympic defender referee competition basketball marathon "
    "gymnastics victory training",
};

constexpr const char* kFillers[] = {"the", "a",  "of", "and",  "to",
                                    "in",  "is", "with", "for", "on"};

struct LevelShape {
  int min_words;
  int max_words;
  std::array<double, 3> syllable_mix;  // weights for 1, 2, 3+ syllables
  double filler_rate;
};

// Index 0 is the hardest text (lowest Flesch score).
LevelShape level_shape(std::size_t level, std::size_t levels) {
  const double hardness =
      levels <= 1 ? 0.5
                  : 1.0 - static_cast<double>(level) / static_cast<double>(levels - 1);
  LevelShape s;
  s.min_words = 4 + static_cast<int>(hardness * 16);
  s.max_words = s.min_words + 4 + static_cast<int>(hardness * 6);
  s.syllable_mix = {0.95 - 0.85 * hardness, 0.05 + 0.25 * hardness, 0.6 * hardness};
  s.filler_rate = 0.3 - 0.25 * hardness;
  return s;
}

constexpr int kBodyWords = 48;

}  // namespace

QueryGenerator::QueryGenerator(std::vector<std::string> tasks, std::size_t topics,
                               features::ComplexityBinner binner)
    : tasks_(std::move(tasks)), topics_(topics), binner_(binner) {
  if (tasks_.empty()) throw_invalid("QueryGenerator: no tasks");
  if (topics_ == 0 || topics_ > kMaxTopics) {
    throw_invalid("QueryGenerator: topics must be in [1, " +
                  std::to_string(kMaxTopics) + "]");
  }
  for (std::size_t t = 0; t < topics_; ++t) {
    Buckets b;
    std::istringstream words(kTopicWords[t]);
    std::string w;
    while (words >> w) {
      const std::size_t syl = features::count_syllables(w);
      b[std::min<std::size_t>(syl, 3) - 1].push_back(w);
    }
    for (const auto& bucket : b) {
      if (bucket.empty()) throw Error(ErrorCode::kInternal, "topic vocabulary gap");
    }
    vocab_.push_back(std::move(b));
  }
}

std::string QueryGenerator::instruction(std::size_t task, std::mt19937_64& rng) const {
  const auto& all = instruction_templates();
  const auto it = all.find(tasks_[task]);
  if (it == all.end()) {
    return "Please handle this " + tasks_[task] + " request.";
  }
  std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
  return it->second[pick(rng)];
}

std::string QueryGenerator::body(const Cell& cell, std::mt19937_64& rng) const {
  const LevelShape shape = level_shape(cell.level, levels());
  const auto& buckets = vocab_[cell.topic];
  std::uniform_int_distribution<int> length(shape.min_words, shape.max_words);
  std::discrete_distribution<int> bucket(shape.syllable_mix.begin(),
                                         shape.syllable_mix.end());
  std::bernoulli_distribution filler(shape.filler_rate);
  std::uniform_int_distribution<std::size_t> filler_pick(0, std::size(kFillers) - 1);

  std::string out;
  int words = 0;
  while (words < kBodyWords) {
    const int n = length(rng);
    for (int i = 0; i < n; ++i) {
      std::string w;
      if (i > 0 && filler(rng)) {
        w = kFillers[filler_pick(rng)];
      } else {
        const auto& b = buckets[static_cast<std::size_t>(bucket(rng))];
        std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
        w = b[pick(rng)];
      }
      if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (!out.empty()) out += ' ';
      out += w;
    }
    out += '.';
    words += n;
  }
  return out;
}

std::string QueryGenerator::generate(const Cell& cell, std::mt19937_64& rng) const {
  if (cell.task >= tasks_.size() || cell.topic >= topics_ || cell.level >= levels()) {
    throw_invalid("QueryGenerator: cell outside the generator's grid");
  }
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::string text = instruction(cell.task, rng) + "\n\n" + body(cell, rng);
    const auto f = features::flesch_score(text);
    if (binner_.bin(f.score) == cell.level) return text;
  }
  throw Error(ErrorCode::kInternal,
              "QueryGenerator: could not hit complexity bin " +
                  std::to_string(cell.level));
}

Cell QueryGenerator::sample_cell(const std::vector<double>& task_mix,
                                 std::mt19937_64& rng) const {
  Cell c;
  if (task_mix.empty()) {
    c.task = std::uniform_int_distribution<std::size_t>(0, tasks_.size() - 1)(rng);
  } else {
    if (task_mix.size() != tasks_.size()) {
      throw_invalid("task_mix must have one weight per task");
    }
    std::discrete_distribution<std::size_t> d(task_mix.begin(), task_mix.end());
    c.task = d(rng);
  }
  c.topic = std::uniform_int_distribution<std::size_t>(0, topics_ - 1)(rng);
  c.level = std::uniform_int_distribution<std::size_t>(0, levels() - 1)(rng);
  return c;
}

std::vector<Query> generate_stream(const QueryGenerator& gen,
                                   const StreamConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::vector<Query> out;
  out.reserve(config.length);
  for (std::size_t i = 0; i < config.length; ++i) {
    Query q;
    q.cell = gen.sample_cell(config.task_mix, rng);
    q.text = gen.generate(q.cell, rng);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<features::LabeledEmbedding> classifier_training_set(
    const QueryGenerator& gen, const features::EmbeddingProvider& provider,
    std::size_t per_task, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<features::LabeledEmbedding> out;
  for (std::size_t t = 0; t < gen.tasks().size(); ++t) {
    for (std::size_t i = 0; i < per_task; ++i) {
      Cell c;
      c.task = t;
      c.topic = i % gen.topics();
      c.level = (i / gen.topics()) % gen.levels();
      const std::string text = gen.generate(c, rng);
      out.push_back({features::embed(features::instruction_slice(text), provider),
                     gen.tasks()[t]});
    }
  }
  return out;
}

}  // namespace ecoroute::sim
