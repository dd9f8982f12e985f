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

#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ecoroute/error.hpp"
#include "ecoroute/features/classifier.hpp"
#include "ecoroute/features/clustering.hpp"
#include "ecoroute/features/complexity.hpp"
#include "ecoroute/features/context.hpp"
#include "ecoroute/features/embedding.hpp"
#include "ecoroute/features/text.hpp"
#include "test_util.hpp"

namespace ecoroute::features {
namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ecoroute::Error";
  return ErrorCode::kInternal;
}

EmbeddingVector vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return EmbeddingVector(x);
}

TEST(TextTest, TokenizeSplitsOnNonAlphanumerics) {
  EXPECT_EQ(tokenize("Hello, World! x2y z"),
            (std::vector<std::string>{"hello", "world", "x2y", "z"}));
  EXPECT_EQ(tokenize("caf\xc3\xa9 bar"), (std::vector<std::string>{"caf", "bar"}));
  EXPECT_TRUE(tokenize("  ...  ").empty());
}

TEST(TextTest, InstructionSliceTakesTwoLinesOrTwoHundredBytes) {
  EXPECT_EQ(instruction_slice("line one\nline two\nline three"), "line one\nline two");
  EXPECT_EQ(instruction_slice("Summarize this.\n\nBody text"), "Summarize this.\n");
  const std::string long_line(500, 'a');
  EXPECT_EQ(instruction_slice(long_line).size(), kInstructionMaxBytes);
  // A multi-byte character straddling the cut is dropped whole.
  const std::string utf8 = std::string(199, 'a') + "\xc3\xa9" + "tail";
  EXPECT_EQ(instruction_slice(utf8).size(), 199u);
}

TEST(TextTest, TruncateKeepsPrefixThroughLastWord) {
  EXPECT_EQ(truncate_to_tokens("a b c d", 2), "a b");
  EXPECT_EQ(truncate_to_tokens("a b", 5), "a b");
}

TEST(EmbeddingTest, EmptyTextIsInvalid) {
  HashingEmbedder h;
  EXPECT_EQ(code_of([&] { embed("", h); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([&] { embed(" \n\t ", h); }), ErrorCode::kInvalidInput);
}

TEST(EmbeddingTest, DeterministicAndNormalized) {
  HashingEmbedder h;
  const auto a = embed("Answer the following question.", h);
  const auto b = embed("Answer the following question.", h);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dimension(), 64u);
  EXPECT_NEAR(a.norm(), a.values().norm(), 1e-9 * a.values().norm());
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
}

TEST(EmbeddingTest, TextIsTruncatedToTokenLimit) {
  HashingEmbedder h;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> word(0, 999);
  std::string long_text, prefix;
  for (int i = 0; i < 10000; ++i) {
    const std::string w = "w" + std::to_string(word(rng));
    if (!long_text.empty()) long_text += ' ';
    long_text += w;
    if (i == 255) prefix = long_text;
  }
  EXPECT_EQ(embed(long_text, h), embed(prefix, h));
}

TEST(EmbeddingTest, PrecomputedLookupByTextOrFingerprint) {
  const std::string jsonl =
      "{\"id\": \"hello world\", \"vector\": [1, 0, 0]}\n"
      "{\"id\": \"" + text_fingerprint("other text") + "\", \"vector\": [0, 2, 0]}\n";
  const auto p = PrecomputedEmbeddings::parse(jsonl);
  EXPECT_EQ(p.dimension(), 3u);
  EXPECT_EQ(embed("hello world", p).values(), Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(embed("other text", p).values(), Eigen::Vector3d(0, 2, 0));
  EXPECT_EQ(code_of([&] { embed("missing", p); }), ErrorCode::kProviderError);
  EXPECT_EQ(code_of([] {
              PrecomputedEmbeddings::parse("{\"id\": \"a\", \"vector\": [1]}\n"
                                           "{\"id\": \"b\", \"vector\": [1, 2]}\n");
            }),
            ErrorCode::kInvalidInput);
}

TEST(ClassifierTest, ZeroWeightsGiveUniformAndLowestIndex) {
  TaskClassifier clf({"a", "b"}, Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  const auto c = classify_task(clf, vec({1, 0}));
  EXPECT_NEAR(c.probabilities(0), 0.5, 1e-15);
  EXPECT_NEAR(c.probabilities(1), 0.5, 1e-15);
  EXPECT_EQ(c.label_index, 0u);
  EXPECT_EQ(c.label, "a");
}

TEST(ClassifierTest, DominantRowWins) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(1, 0) = 50.0;
  TaskClassifier clf({"a", "b"}, w, Eigen::VectorXd::Zero(2));
  const auto c = classify_task(clf, vec({1, 0}));
  EXPECT_EQ(c.label_index, 1u);
  EXPECT_GT(c.probabilities(1), 0.99);
  EXPECT_EQ(code_of([&] { classify_task(clf, vec({1, 0, 0})); }), ErrorCode::kInvalidInput);
}

TEST(ClassifierTest, SoftmaxSumsToOne) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd z(5);
    for (int k = 0; k < 5; ++k) z(k) = n(rng);
    EXPECT_NEAR(softmax(z).sum(), 1.0, 1e-9);
  }
}

std::vector<LabeledEmbedding> gaussian_blobs(std::uint64_t seed, int per_class) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<LabeledEmbedding> out;
  for (int i = 0; i < per_class; ++i) {
    out.push_back({vec({2.0 + n(rng), n(rng), n(rng)}), "left"});
    out.push_back({vec({-2.0 + n(rng), n(rng), n(rng)}), "right"});
  }
  return out;
}

// Independent check that the data really is linearly separable: the
// perceptron converges to zero training errors only on separable data.
bool perceptron_separates(const std::vector<LabeledEmbedding>& data) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  for (int epoch = 0; epoch < 1000; ++epoch) {
    int mistakes = 0;
    for (const auto& p : data) {
      Eigen::VectorXd x(4);
      x << p.embedding.values(), 1.0;
      const double y = p.label == "left" ? 1.0 : -1.0;
      if (y * w.dot(x) <= 0) {
        w += y * x;
        ++mistakes;
      }
    }
    if (mistakes == 0) return true;
  }
  return false;
}

TEST(ClassifierTest, SeparableBlobsReachPerfectHeldOutF1) {
  const auto data = gaussian_blobs(11, 50);
  ASSERT_TRUE(perceptron_separates(data));
  TrainingConfig tc;
  tc.seed = 5;
  const auto trained = train_task_classifier(data, tc);
  ASSERT_TRUE(trained.report.validation_macro_f1.has_value());
  EXPECT_DOUBLE_EQ(*trained.report.validation_macro_f1, 1.0);
  EXPECT_GT(trained.report.validation_size, 0u);
}

TEST(ClassifierTest, SingleLabelIsDegenerate) {
  auto data = gaussian_blobs(1, 10);
  for (auto& p : data) p.label = "only";
  EXPECT_EQ(code_of([&] { train_task_classifier(data, TrainingConfig{}); }),
            ErrorCode::kDegenerateTraining);
}

TEST(ClassifierTest, TrainingIsDeterministic) {
  const auto data = gaussian_blobs(2, 30);
  TrainingConfig tc;
  tc.seed = 9;
  const auto a = train_task_classifier(data, tc);
  const auto b = train_task_classifier(data, tc);
  EXPECT_EQ(a.classifier.weights(), b.classifier.weights());
  EXPECT_EQ(a.classifier.bias(), b.classifier.bias());
}

TEST(ClassifierTest, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const int labels = 3, dim = 4, samples = 5;
  Eigen::MatrixXd w(labels, dim), x(dim, samples);
  Eigen::VectorXd b(labels);
  for (int i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  for (int i = 0; i < b.size(); ++i) b(i) = n(rng);
  const std::vector<std::size_t> y = {0, 2, 1, 1, 0};
  const double decay = 1e-2, h = 1e-6;
  const auto g = cross_entropy_loss(w, b, x, y, decay);

  auto check = [](double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    EXPECT_LE(std::fabs(analytic - numeric) / denom, 1e-4);
  };
  for (int i = 0; i < w.size(); ++i) {
    Eigen::MatrixXd wp = w, wm = w;
    wp.data()[i] += h;
    wm.data()[i] -= h;
    const double num = (cross_entropy_loss(wp, b, x, y, decay).loss -
                        cross_entropy_loss(wm, b, x, y, decay).loss) / (2 * h);
    check(g.grad_weights.data()[i], num);
  }
  for (int i = 0; i < b.size(); ++i) {
    Eigen::VectorXd bp = b, bm = b;
    bp(i) += h;
    bm(i) -= h;
    const double num = (cross_entropy_loss(w, bp, x, y, decay).loss -
                        cross_entropy_loss(w, bm, x, y, decay).loss) / (2 * h);
    check(g.grad_bias(i), num);
  }
}

TEST(ClassifierTest, JsonRoundTripUsesDocumentedFields) {
  Eigen::MatrixXd w(2, 3);
  w << 0.1, -0.2, 0.3, 1e-17, 2.5, -7.0;
  TaskClassifier clf({"qa", "math"}, w, Eigen::Vector2d(0.5, -0.25));
  const auto j = clf.to_json();
  EXPECT_TRUE(j.contains("labels") && j.contains("W") && j.contains("b") && j.contains("d_emb"));
  EXPECT_EQ(j.at("d_emb").get<int>(), 3);
  const auto back = TaskClassifier::from_json(j);
  EXPECT_EQ(back.weights(), w);
  EXPECT_EQ(back.labels(), clf.labels());
}

TEST(ClusterTest, AssignmentExamples) {
  ClusterModel m({vec({1, 0}), vec({0, 1})}, {1, 1});
  EXPECT_EQ(m.assign(vec({1, 0})), 0u);
  EXPECT_EQ(m.assign(vec({1, 1})), 0u);
  EXPECT_EQ(m.assign(vec({0.6, 0.8})), 1u);
  EXPECT_EQ(code_of([&] { m.assign(vec({0, 0})); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { ClusterModel(2).assign(vec({1, 0})); }), ErrorCode::kNotReady);
}

TEST(ClusterTest, UpdateExamples) {
  ClusterModel m({vec({0, 0}), vec({5, 5})}, {1, 1});
  m.update(vec({2, 0}), 0);
  EXPECT_EQ(m.centroids()[0].values(), Eigen::Vector2d(1, 0));
  EXPECT_EQ(m.counts()[0], 2u);
  m.update(vec({1, 0}), 0);
  EXPECT_EQ(m.centroids()[0].values(), Eigen::Vector2d(1, 0));
  EXPECT_EQ(m.counts()[0], 3u);
  EXPECT_EQ(code_of([&] { m.update(vec({1, 0}), 2); }), ErrorCode::kInvalidInput);
}

TEST(ClusterTest, RepeatedPointConverges) {
  ClusterModel m({vec({3, -1}), vec({0, 1})}, {1, 1});
  for (int t = 0; t < 10; ++t) m.update(vec({-2, 4}), 0);
  const Eigen::Vector2d telescoped = (Eigen::Vector2d(3, -1) + 10 * Eigen::Vector2d(-2, 4)) / 11;
  EXPECT_LE((m.centroids()[0].values() - telescoped).norm(), 1e-12);
  ClusterModel fresh(1);
  fresh.observe(vec({-2, 4}));
  fresh.observe(vec({-2, 4}));
  EXPECT_LE((fresh.centroids()[0].values() - Eigen::Vector2d(-2, 4)).norm(), 1e-9);
}

TEST(ClusterTest, IncrementalMeanMatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector3d mu0(0.5, -1.0, 2.0);
  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i < 40; ++i) points.emplace_back(n(rng), n(rng), n(rng));
  for (int order = 0; order < 3; ++order) {
    std::shuffle(points.begin(), points.end(), rng);
    ClusterModel m({EmbeddingVector(mu0), vec({9, 9, 9})}, {1, 1});
    for (const auto& p : points) m.update(EmbeddingVector(p), 0);
    Eigen::Vector3d brute = mu0;
    for (const auto& p : points) brute += p;
    brute /= static_cast<double>(points.size() + 1);
    EXPECT_LE((m.centroids()[0].values() - brute).norm(), 1e-9);
  }
}

TEST(ClusterTest, SeedsFromFirstDistinctAndConservesMass) {
  ClusterModel m(3);
  m.observe(vec({1, 0, 0}));
  m.observe(vec({2, 0, 0}));  // parallel to the first, not distinct
  EXPECT_EQ(m.seeded(), 1u);
  m.observe(vec({0, 1, 0}));
  m.observe(vec({0, 0, 1}));
  EXPECT_TRUE(m.ready());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<std::uint64_t> last = m.counts();
  for (int i = 0; i < 200; ++i) {
    m.observe(vec({u(rng), u(rng), u(rng)}));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_GE(m.counts()[c], last[c]);
    last = m.counts();
  }
  EXPECT_EQ(m.total_count(), 204u);
  EXPECT_EQ(m.centroids().size(), 3u);
}

TEST(FleschTest, HandExamples) {
  const auto cat = flesch_score("The cat sat.");
  EXPECT_EQ(cat.words, 3u);
  EXPECT_EQ(cat.sentences, 1u);
  EXPECT_EQ(cat.syllables, 3u);
  EXPECT_NEAR(cat.raw, 119.19, 1e-9);
  EXPECT_EQ(cat.score, 100.0);

  // 20 words per sentence, two syllables per word.
  std::string s;
  for (int i = 0; i < 20; ++i) s += (i ? " " : "") + std::string("paper");
  s += ".";
  const auto engineered = flesch_score(s);
  EXPECT_NEAR(engineered.raw, 206.835 - 20.3 - 169.2, 1e-9);
  EXPECT_NEAR(engineered.raw, 17.335, 1e-9);
  EXPECT_EQ(code_of([] { flesch_score("   \n "); }), ErrorCode::kInvalidInput);
}

TEST(FleschTest, GoldenCorpus) {
  std::ifstream in(std::string(ECOROUTE_TEST_DATA_DIR) + "/flesch_golden.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string text = j.at("text");
    const auto got = flesch_score(text);
    const auto ref = testing::reference_flesch(text);
    EXPECT_EQ(got.words, j.at("words").get<std::size_t>()) << text;
    EXPECT_EQ(got.sentences, j.at("sentences").get<std::size_t>()) << text;
    EXPECT_EQ(got.syllables, j.at("syllables").get<std::size_t>()) << text;
    EXPECT_NEAR(got.raw, j.at("raw").get<double>(), 1e-6) << text;
    EXPECT_NEAR(got.raw, ref.raw, 1e-6) << text;
    EXPECT_GE(got.score, 0.0);
    EXPECT_LE(got.score, 100.0);
    ++n;
  }
  EXPECT_EQ(n, 50);
}

TEST(BinnerTest, Boundaries) {
  ComplexityBinner b(3);
  EXPECT_EQ(b.bin(45), 1u);
  EXPECT_EQ(b.bin(100), 2u);
  EXPECT_EQ(b.bin(0), 0u);
  EXPECT_EQ(b.bin(-20), 0u);
  EXPECT_EQ(b.bin(250), 2u);
  for (double s = 0; s <= 100; s += 0.25) {
    const auto k = b.bin(s);
    EXPECT_LT(k, 3u);
    EXPECT_GE(s, b.lo() + b.width() * static_cast<double>(k) - 1e-9);
  }
}

TEST(ContextTest, LayoutAndOneHot) {
  EXPECT_EQ(ContextLayout({5, 3, 3}).dimension(), 12u);
  const auto x = build_context(0, 0, 0, ContextLayout({2, 2, 2}));
  Eigen::VectorXd want(7);
  want << 1, 0, 1, 0, 1, 0, 1;
  EXPECT_EQ(x.values(), want);
  EXPECT_EQ(code_of([] { build_context(5, 0, 0, ContextLayout({5, 3, 3})); }),
            ErrorCode::kInvalidInput);
  EXPECT_EQ(ContextLayout({5, 3, 3}, FeatureSet::none()).dimension(), 1u);
  EXPECT_EQ(ContextLayout({5, 3, 3}, FeatureSet::parse("task")).dimension(), 6u);
}

TEST(ContextTest, PipelineEmitsFourOnesAndIsDeterministicWhenFrozen) {
  auto provider = std::make_shared<HashingEmbedder>();
  std::vector<LabeledEmbedding> data;
  const std::vector<std::pair<std::string, std::string>> seeds = {
      {"Answer the question.", "qa"},   {"Please answer this question.", "qa"},
      {"Solve the math problem.", "math"}, {"Compute the sum.", "math"}};
  for (const auto& [t, l] : seeds) data.push_back({embed(t, *provider), l});
  TrainingConfig tc;
  tc.validation_fraction = 0.0;
  auto trained = train_task_classifier(data, tc);
  ContextPipeline p(provider, trained.classifier, 3, ComplexityBinner(3));
  const std::vector<std::string> queries = {
      "Answer the question.\n\nWho won the match?", "Compute the sum.\n\n2 + 2",
      "Answer the question.\n\nWhat is the capital of France?", "Solve it."};
  for (const auto& q : queries) {
    const auto ctx = p.generate(q, true);
    EXPECT_EQ(ctx.x.dimension(), 9u);
    EXPECT_EQ(ctx.x.values().sum(), 4.0);
    for (Eigen::Index i = 0; i < ctx.x.values().size(); ++i) {
      EXPECT_TRUE(ctx.x.values()(i) == 0.0 || ctx.x.values()(i) == 1.0);
    }
    EXPECT_EQ(ctx.x.values()(8), 1.0);
  }
  EXPECT_EQ(p.generate(queries[0], false).x, p.generate(queries[0], false).x);
  EXPECT_EQ(code_of([&] { p.generate("  ", false); }), ErrorCode::kInvalidInput);
}

}  // namespace
}  // namespace ecoroute::features
