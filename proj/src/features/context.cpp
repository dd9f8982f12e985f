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

#include "ecoroute/features/context.hpp"

#include <chrono>

#include "ecoroute/error.hpp"
#include "ecoroute/features/text.hpp"

namespace ecoroute::features {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_context("stage '" + std::string(stage) + "'");
  }
}

}  // namespace

FeatureSet FeatureSet::parse(std::string_view name) {
  if (name == "none") return none();
  if (name == "full") return full();
  if (name == "task") return {true, false, false};
  if (name == "cluster") return {false, true, false};
  if (name == "complexity") return {false, false, true};
  if (name == "task+cluster") return {true, true, false};
  if (name == "task+complexity") return {true, false, true};
  if (name == "cluster+complexity") return {false, true, true};
  throw_invalid("unknown feature configuration '" + std::string(name) + "'");
}

std::string FeatureSet::name() const {
  if (task && cluster && complexity) return "full";
  std::string out;
  auto add = [&](bool on, const char* part) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += part;
  };
  add(task, "task");
  add(cluster, "cluster");
  add(complexity, "complexity");
  return out.empty() ? "none" : out;
}

ContextLayout::ContextLayout(ContextDims dims, FeatureSet features)
    : dims_(dims), features_(features) {
  if ((features_.task && dims_.tasks == 0) ||
      (features_.cluster && dims_.clusters == 0) ||
      (features_.complexity && dims_.bins == 0)) {
    throw_invalid("ContextLayout: enabled feature block has zero size");
  }
}

std::size_t ContextLayout::dimension() const noexcept {
  return (features_.task ? dims_.tasks : 0) +
         (features_.cluster ? dims_.clusters : 0) +
         (features_.complexity ? dims_.bins : 0) + 1;
}

ContextVector build_context(std::size_t task, std::size_t cluster,
                            std::size_t bin, const ContextLayout& layout) {
  const auto& dims = layout.dims();
  const auto& f = layout.features();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.dimension()));
  std::size_t offset = 0;
  auto put = [&](bool enabled, std::size_t index, std::size_t size,
                 const char* what) {
    if (!enabled) return;
    if (index >= size) {
      throw_invalid(std::string("build_context: ") + what + " index " +
                    std::to_string(index) + " out of range [0, " +
                    std::to_string(size) + ")");
    }
    x[static_cast<Eigen::Index>(offset + index)] = 1.0;
    offset += size;
  };
  put(f.task, task, dims.tasks, "task");
  put(f.cluster, cluster, dims.clusters, "cluster");
  put(f.complexity, bin, dims.bins, "complexity bin");
  x[x.size() - 1] = 1.0;
  return ContextVector(std::move(x));
}

ContextPipeline::ContextPipeline(std::shared_ptr<const EmbeddingProvider> provider,
                                 TaskClassifier classifier, std::size_t clusters,
                                 ComplexityBinner binner, FeatureSet features)
    : provider_(std::move(provider)),
      classifier_(std::move(classifier)),
      binner_(binner),
      layout_(ContextDims{classifier_.num_labels(), clusters, binner.n_bins()},
              features),
      clusters_(clusters) {
  if (!provider_) throw_invalid("ContextPipeline: provider is null");
  if (provider_->dimension() != classifier_.input_dimension()) {
    throw_invalid("ContextPipeline: classifier dimension does not match provider");
  }
}

ExtractedFeatures ContextPipeline::extract(std::string_view text) const {
  if (trim(text).empty()) throw_invalid("query text is empty");
  ExtractedFeatures out;

  auto start = Clock::now();
  out.task = in_stage("task", [&] {
    const auto instr = embed(instruction_slice(trim(text)), *provider_);
    return classify_task(classifier_, instr);
  });
  out.timings.task_ms = ms_since(start);

  start = Clock::now();
  out.full_embedding = in_stage("embed", [&] { return embed(text, *provider_); });
  out.timings.cluster_ms = ms_since(start);

  start = Clock::now();
  out.flesch = in_stage("complexity", [&] { return flesch_score(text); });
  out.complexity_bin = binner_.bin(out.flesch.score);
  out.timings.complexity_ms = ms_since(start);
  return out;
}

GeneratedContext ContextPipeline::finalize(ExtractedFeatures extracted,
                                           bool update_clusters) {
  GeneratedContext out;
  out.timings = extracted.timings;

  auto start = Clock::now();
  const std::size_t cluster = in_stage("cluster", [&] {
    std::lock_guard lock(cluster_mu_);
    return update_clusters ? clusters_.observe(extracted.full_embedding)
                           : clusters_.peek(extracted.full_embedding);
  });
  out.timings.cluster_ms += ms_since(start);

  start = Clock::now();
  out.x = in_stage("context", [&] {
    return build_context(extracted.task.label_index, cluster,
                         extracted.complexity_bin, layout_);
  });
  out.timings.build_ms = ms_since(start);

  out.features.task = extracted.task.label_index;
  out.features.task_label = extracted.task.label;
  out.features.task_probabilities = std::move(extracted.task.probabilities);
  out.features.cluster = cluster;
  out.features.flesch_raw = extracted.flesch.raw;
  out.features.flesch = extracted.flesch.score;
  out.features.complexity_bin = extracted.complexity_bin;
  return out;
}

GeneratedContext ContextPipeline::generate(std::string_view text,
                                           bool update_clusters) {
  return finalize(extract(text), update_clusters);
}

ClusterModel ContextPipeline::cluster_snapshot() const {
  std::lock_guard lock(cluster_mu_);
  return clusters_;
}

void ContextPipeline::restore_clusters(ClusterModel model) {
  if (model.k() != layout_.dims().clusters) {
    throw_invalid("restore_clusters: K does not match the layout");
  }
  std::lock_guard lock(cluster_mu_);
  clusters_ = std::move(model);
}

}  // namespace ecoroute::features
