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

#include "ecoroute/features/embedding.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"
#include "ecoroute/features/text.hpp"

namespace ecoroute::features {

EmbeddingVector::EmbeddingVector(Eigen::VectorXd values)
    : values_(std::move(values)), norm_(values_.norm()) {}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw_invalid("cosine_similarity: dimension mismatch");
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  return a.values().dot(b.values()) / (a.norm() * b.norm());
}

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
  const auto trimmed = trim(text);
  if (trimmed.empty()) throw_invalid("embed: text is empty");
  const auto truncated = truncate_to_tokens(trimmed, provider.max_tokens());
  EmbeddingVector result;
  try {
    result = provider.embed_truncated(truncated);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProviderError) throw;
    throw Error(ErrorCode::kProviderError,
                "embedding provider '" + provider.name() + "' failed: " +
                    e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kProviderError,
                "embedding provider '" + provider.name() + "' failed: " +
                    e.what());
  }
  if (result.dimension() != provider.dimension()) {
    throw Error(ErrorCode::kProviderError,
                "embedding provider '" + provider.name() +
                    "' returned a vector of the wrong dimension");
  }
  return result;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::size_t max_tokens)
    : dimension_(dimension), max_tokens_(max_tokens) {
  if (dimension_ == 0) throw_invalid("HashingEmbedder: dimension must be > 0");
  if (max_tokens_ == 0) throw_invalid("HashingEmbedder: max_tokens must be > 0");
}

EmbeddingVector HashingEmbedder::embed_truncated(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) {
    throw Error(ErrorCode::kProviderError, "no tokens to embed");
  }
  Eigen::VectorXd values = Eigen::VectorXd::Zero(dimension_);
  auto add = [&](std::string_view feature) {
    const std::uint64_t h = fnv1a64(feature);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    values[static_cast<Eigen::Index>((h & 0x7FFFFFFFFFFFFFFFULL) %
                                     dimension_)] += sign;
  };
  std::string bigram;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) {
      bigram.assign(tokens[i]).append(1, ' ').append(tokens[i + 1]);
      add(bigram);
    }
  }
  const double norm = values.norm();
  if (norm == 0.0) {
    throw Error(ErrorCode::kProviderError,
                "hashed features cancelled to a zero vector");
  }
  return EmbeddingVector(values / norm);
}

PrecomputedEmbeddings PrecomputedEmbeddings::load(
    const std::filesystem::path& path, std::size_t max_tokens) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kProviderError,
                "cannot open embedding file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), max_tokens);
}

PrecomputedEmbeddings PrecomputedEmbeddings::parse(std::string_view jsonl,
                                                   std::size_t max_tokens) {
  PrecomputedEmbeddings out;
  out.max_tokens_ = max_tokens;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto next = jsonl.find('\n', pos);
    if (next == std::string_view::npos) next = jsonl.size();
    const auto line = trim(jsonl.substr(pos, next - pos));
    pos = next + 1;
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw_invalid("embedding file line " + std::to_string(line_no) + ": " +
                    e.what());
    }
    if (!obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("vector") || !obj["vector"].is_array()) {
      throw_invalid("embedding file line " + std::to_string(line_no) +
                    ": expected {\"id\": string, \"vector\": [float...]}");
    }
    const auto& arr = obj["vector"];
    Eigen::VectorXd values(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      values[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    if (out.dimension_ == 0) out.dimension_ = arr.size();
    if (arr.size() != out.dimension_ || arr.empty()) {
      throw_invalid("embedding file line " + std::to_string(line_no) +
                    ": inconsistent vector dimension");
    }
    out.vectors_.insert_or_assign(obj["id"].get<std::string>(),
                                  EmbeddingVector(std::move(values)));
  }
  if (out.vectors_.empty()) throw_invalid("embedding file has no entries");
  return out;
}

EmbeddingVector PrecomputedEmbeddings::embed_truncated(
    std::string_view text) const {
  if (auto it = vectors_.find(std::string(text)); it != vectors_.end()) {
    return it->second;
  }
  if (auto it = vectors_.find(text_fingerprint(text)); it != vectors_.end()) {
    return it->second;
  }
  throw Error(ErrorCode::kProviderError,
              "no precomputed embedding for text fingerprint " +
                  text_fingerprint(text));
}

}  // namespace ecoroute::features
