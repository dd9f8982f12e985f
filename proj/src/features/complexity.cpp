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

#include "ecoroute/features/complexity.hpp"

#include <algorithm>
#include <cmath>

#include "ecoroute/error.hpp"
#include "ecoroute/features/text.hpp"

namespace ecoroute::features {
namespace {

bool is_vowel(char c) noexcept {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
    case 'A': case 'E': case 'I': case 'O': case 'U': case 'Y':
      return true;
    default:
      return false;
  }
}

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::size_t count_syllables(std::string_view word) {
  std::size_t groups = 0;
  bool in_group = false;
  for (const char c : word) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (!word.empty() && (word.back() == 'e' || word.back() == 'E') && groups > 0) {
    --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

std::size_t count_sentences(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 == text.size() || is_space(text[i + 1])) ++n;
  }
  return n;
}

FleschResult flesch_score(std::string_view text) {
  FleschResult r;
  for (const auto& span : word_spans(text)) {
    ++r.words;
    r.syllables += count_syllables(text.substr(span.begin, span.end - span.begin));
  }
  if (r.words == 0) throw_invalid("flesch_score: text has no countable words");
  r.sentences = std::max<std::size_t>(count_sentences(text), 1);
  const double words = static_cast<double>(r.words);
  r.raw = kFleschBase -
          kFleschSentenceWeight * (words / static_cast<double>(r.sentences)) -
          kFleschSyllableWeight * (static_cast<double>(r.syllables) / words);
  r.score = std::clamp(r.raw, 0.0, 100.0);
  return r;
}

ComplexityBinner::ComplexityBinner(std::size_t n_bins, double lo, double hi)
    : n_bins_(n_bins), lo_(lo), hi_(hi) {
  if (n_bins_ == 0) throw_invalid("ComplexityBinner: n_bins must be positive");
  if (!(lo_ < hi_)) throw_invalid("ComplexityBinner: lo must be below hi");
}

std::size_t ComplexityBinner::bin(double score) const {
  if (std::isnan(score)) throw_invalid("bin_complexity: score is NaN");
  const double s = std::clamp(score, lo_, hi_);
  const auto b = static_cast<std::size_t>(std::floor((s - lo_) / width()));
  return std::min(b, n_bins_ - 1);
}

}  // namespace ecoroute::features
