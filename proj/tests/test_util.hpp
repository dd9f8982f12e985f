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

#include <cmath>
#include <cstddef>
#include <regex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ecoroute::testing {

using Matrix = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting on plain vectors. Kept free of
// Eigen so it can serve as an independent check on the library's algebra.
inline std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

// (X^T X + lambda I)^-1 X^T r from the logged rows.
inline std::vector<double> ridge_solution(const std::vector<std::vector<double>>& xs,
                                          const std::vector<double>& rs,
                                          std::size_t d, double lambda) {
  Matrix a(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i][i] = lambda;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    for (std::size_t i = 0; i < d; ++i) {
      b[i] += rs[n] * xs[n][i];
      for (std::size_t j = 0; j < d; ++j) a[i][j] += xs[n][i] * xs[n][j];
    }
  }
  return solve_dense(std::move(a), std::move(b));
}

inline double relative_error(const std::vector<double>& got,
                             const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

struct FleschCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
  double raw = 0.0;
};

// Reading-ease formula written against std::regex rather than the library's
// hand-rolled scanners.
inline FleschCounts reference_flesch(const std::string& text) {
  static const std::regex word_re("[A-Za-z0-9]+");
  static const std::regex vowel_re("[aeiouyAEIOUY]+");
  static const std::regex sentence_re("[.!?](?=[ \\t\\n\\r\\f\\v]|$)");
  FleschCounts c;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word_re);
       it != std::sregex_iterator(); ++it) {
    const std::string w = it->str();
    auto groups = static_cast<std::size_t>(
        std::distance(std::sregex_iterator(w.begin(), w.end(), vowel_re),
                      std::sregex_iterator()));
    if ((w.back() == 'e' || w.back() == 'E') && groups > 0) --groups;
    c.syllables += groups == 0 ? 1 : groups;
    ++c.words;
  }
  c.sentences = static_cast<std::size_t>(std::distance(
      std::sregex_iterator(text.begin(), text.end(), sentence_re), std::sregex_iterator()));
  if (c.sentences == 0) c.sentences = 1;
  const double w = static_cast<double>(c.words);
  c.raw = 206.835 - 1.015 * (w / static_cast<double>(c.sentences)) -
          84.6 * (static_cast<double>(c.syllables) / w);
  return c;
}

}  // namespace ecoroute::testing
