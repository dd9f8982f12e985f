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

#include "ecoroute/features/text.hpp"

#include <cstdint>
#include <cstdio>

namespace ecoroute::features {

bool is_word_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

std::vector<TokenSpan> word_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    spans.push_back({i, j});
    i = j;
  }
  return spans;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const auto& span : word_spans(text)) {
    std::string token(text.substr(span.begin, span.end - span.begin));
    for (auto& c : token) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::string_view truncate_to_tokens(std::string_view text,
                                    std::size_t max_tokens) {
  std::size_t seen = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    if (++seen == max_tokens) return text.substr(0, j);
    i = j;
  }
  return text;
}

std::string_view trim(std::string_view text) noexcept {
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

std::string_view instruction_slice(std::string_view prompt) {
  std::size_t end = prompt.size();
  std::size_t newlines = 0;
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (prompt[i] == '\n' && ++newlines == kInstructionMaxLines) {
      end = i;
      break;
    }
  }
  if (end > kInstructionMaxBytes) {
    end = kInstructionMaxBytes;
    // Back off over UTF-8 continuation bytes.
    while (end > 0 &&
           (static_cast<unsigned char>(prompt[end]) & 0xC0) == 0x80) {
      --end;
    }
  }
  return prompt.substr(0, end);
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string text_fingerprint(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

}  // namespace ecoroute::features
