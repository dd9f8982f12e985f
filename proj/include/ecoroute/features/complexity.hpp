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
#include <string_view>

namespace ecoroute::features {

// Counting rules:
//   word      maximal run of ASCII letters/digits
//   sentence  '.', '!' or '?' followed by whitespace or end of text; text
//             with words but no terminator counts as one sentence
//   syllable  maximal runs of [aeiouy] per word (case-insensitive), minus one
//             for a trailing 'e', at least one per word
std::size_t count_syllables(std::string_view word);
std::size_t count_sentences(std::string_view text);

struct FleschResult {
  double raw = 0.0;    // unclamped formula value
  double score = 0.0;  // clamped to [0, 100]
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

inline constexpr double kFleschBase = 206.835;
inline constexpr double kFleschSentenceWeight = 1.015;
inline constexpr double kFleschSyllableWeight = 84.6;

// Flesch reading ease. Throws kInvalidInput when the text has no words.
FleschResult flesch_score(std::string_view text);

// Equal-width bins over [lo, hi]. Scores outside the range are clamped; the
// upper bound maps to the last bin.
class ComplexityBinner {
 public:
  explicit ComplexityBinner(std::size_t n_bins, double lo = 0.0,
                            double hi = 100.0);

  std::size_t n_bins() const noexcept { return n_bins_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return (hi_ - lo_) / static_cast<double>(n_bins_); }

  std::size_t bin(double score) const;

 private:
  std::size_t n_bins_;
  double lo_;
  double hi_;
};

}  // namespace ecoroute::features
