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
#include <string>
#include <string_view>
#include <vector>

namespace ecoroute::features {

// A word is a maximal run of ASCII letters and digits. Bytes outside that set
// (punctuation, whitespace, UTF-8 continuation bytes) separate words.
bool is_word_char(char c) noexcept;

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte
};

std::vector<TokenSpan> word_spans(std::string_view text);

// Lower-cased words, in order of appearance.
std::vector<std::string> tokenize(std::string_view text);

// Prefix of `text` ending right after its `max_tokens`-th word. Text with at
// most `max_tokens` words is returned unchanged.
std::string_view truncate_to_tokens(std::string_view text,
                                    std::size_t max_tokens);

std::string_view trim(std::string_view text) noexcept;

// First two lines or first 200 bytes of the prompt, whichever is shorter. The
// byte cut never splits a UTF-8 sequence.
std::string_view instruction_slice(std::string_view prompt);

inline constexpr std::size_t kInstructionMaxLines = 2;
inline constexpr std::size_t kInstructionMaxBytes = 200;

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data) noexcept;

// Hex fingerprint used to key precomputed embeddings.
std::string text_fingerprint(std::string_view text);

}  // namespace ecoroute::features
