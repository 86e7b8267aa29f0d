// Copyright 2026 The flsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Straight-line reference implementations used as test oracles. They work on
// plain nested vectors and share no code with the library under test.

#ifndef FLSIM_TESTS_SUPPORT_ORACLES_HPP_
#define FLSIM_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace flsim::testing {

using Vec = std::vector<double>;
using Rows = std::vector<Vec>;  // one client model per entry, ordered by id

inline double OracleSqDist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline Vec OracleMean(const Rows& x, const std::vector<std::size_t>& which) {
  Vec out(x.front().size(), 0.0);
  for (std::size_t c : which)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[c][j];
  for (double& v : out) v /= static_cast<double>(which.size());
  return out;
}

inline std::vector<std::size_t> AllOf(const Rows& x) {
  std::vector<std::size_t> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

inline double OracleMedianOf(Vec v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline Vec OracleMedian(const Rows& x) {
  Vec out(x.front().size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    Vec col;
    for (const auto& r : x) col.push_back(r[j]);
    out[j] = OracleMedianOf(col);
  }
  return out;
}

inline Vec OracleTrimmedMean(const Rows& x, double beta) {
  const std::size_t m = x.size();
  const auto trim = static_cast<std::size_t>(std::floor(beta * static_cast<double>(m)));
  Vec out(x.front().size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    Vec col;
    for (const auto& r : x) col.push_back(r[j]);
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (std::size_t i = trim; i < m - trim; ++i) s += col[i];
    out[j] = s / static_cast<double>(m - 2 * trim);
  }
  return out;
}

// Krum score of every member of `pool`: sum of the squared distances to its
// |pool| - b - 2 closest other members.
inline std::vector<double> OracleKrumScores(const Rows& x, const std::vector<std::size_t>& pool,
                                            std::size_t b) {
  const std::size_t n = pool.size();
  const std::size_t nb = n >= b + 2 ? n - b - 2 : 0;
  std::vector<double> scores;
  for (std::size_t a : pool) {
    Vec d;
    for (std::size_t o : pool)
      if (o != a) d.push_back(OracleSqDist(x[a], x[o]));
    std::sort(d.begin(), d.end());
    double s = 0.0;
    for (std::size_t i = 0; i < nb; ++i) s += d[i];
    scores.push_back(s);
  }
  return scores;
}

// Positions of the k smallest scores; equal scores go to the earlier position.
inline std::vector<std::size_t> OracleLowest(const std::vector<double>& s, std::size_t k) {
  std::vector<std::size_t> out;
  std::vector<bool> used(s.size(), false);
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t best = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (used[i]) continue;
      if (best == s.size() || s[i] < s[best]) best = i;
    }
    used[best] = true;
    out.push_back(best);
  }
  return out;
}

struct OracleSelection {
  Vec model;
  std::set<std::size_t> kept;
};

inline OracleSelection OracleMultiKrum(const Rows& x, std::size_t b, std::size_t k) {
  const auto pool = AllOf(x);
  const auto pick = OracleLowest(OracleKrumScores(x, pool, b), k);
  OracleSelection r;
  std::vector<std::size_t> chosen;
  for (std::size_t p : pick) {
    chosen.push_back(pool[p]);
    r.kept.insert(pool[p]);
  }
  std::sort(chosen.begin(), chosen.end());
  r.model = OracleMean(x, chosen);
  return r;
}

inline OracleSelection OracleBulyan(const Rows& x, std::size_t b) {
  const std::size_t alpha = x.size() - 2 * b;
  const std::size_t beta = alpha - 2 * b;
  std::vector<std::size_t> pool = AllOf(x);
  std::vector<std::size_t> chosen;
  while (chosen.size() < alpha) {
    const std::size_t p = OracleLowest(OracleKrumScores(x, pool, b), 1).front();
    chosen.push_back(pool[p]);
    pool.erase(pool.begin() + static_cast<long>(p));
  }
  OracleSelection r;
  r.kept.insert(chosen.begin(), chosen.end());
  r.model.assign(x.front().size(), 0.0);
  for (std::size_t j = 0; j < r.model.size(); ++j) {
    Vec col;
    for (std::size_t c : chosen) col.push_back(x[c][j]);
    const double med = OracleMedianOf(col);
    std::vector<std::pair<double, double>> keyed;
    for (double v : col) keyed.emplace_back(std::abs(v - med), v);
    std::sort(keyed.begin(), keyed.end());
    double s = 0.0;
    for (std::size_t i = 0; i < beta; ++i) s += keyed[i].second;
    r.model[j] = s / static_cast<double>(beta);
  }
  return r;
}

// Square matrices as row-major vectors of side n.
struct SmallMat {
  std::size_t n = 0;
  Vec v;
  double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
};

inline SmallMat SmallMul(const SmallMat& a, const SmallMat& b) {
  SmallMat c{a.n, Vec(a.n * a.n, 0.0)};
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t k = 0; k < a.n; ++k)
      for (std::size_t j = 0; j < a.n; ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline SmallMat SmallT(const SmallMat& a) {
  SmallMat t{a.n, Vec(a.n * a.n)};
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < a.n; ++j) t(j, i) = a(i, j);
  return t;
}

// sum_t ||Y_t - A X_t B||_F^2 over consecutive pairs of `series`.
inline double OracleMarLoss(const std::vector<SmallMat>& series, const SmallMat& a,
                            const SmallMat& b) {
  double loss = 0.0;
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    const SmallMat f = SmallMul(SmallMul(a, series[t]), b);
    for (std::size_t i = 0; i < f.v.size(); ++i) {
      const double e = series[t + 1].v[i] - f.v[i];
      loss += e * e;
    }
  }
  return loss;
}

// Gradient descent with backtracking on the joint (A, B) objective, started
// from A = B = I and from `restarts` random points; returns the best loss.
inline double GradientDescentMarLoss(const std::vector<SmallMat>& series, int steps,
                                     int restarts, std::uint64_t seed) {
  const std::size_t n = series.front().n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r <= restarts; ++r) {
    SmallMat a{n, Vec(n * n, 0.0)};
    SmallMat b{n, Vec(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) a(i, i) = b(i, i) = 1.0;
    if (r > 0) {
      for (double& x : a.v) x += normal(rng);
      for (double& x : b.v) x += normal(rng);
    }
    double loss = OracleMarLoss(series, a, b);
    double step = 1e-2;
    for (int it = 0; it < steps; ++it) {
      // dL/dA = -2 sum E (X B)^T, dL/dB = -2 sum (A X)^T E with E = Y - A X B.
      SmallMat ga{n, Vec(n * n, 0.0)};
      SmallMat gb{n, Vec(n * n, 0.0)};
      for (std::size_t t = 0; t + 1 < series.size(); ++t) {
        const SmallMat ax = SmallMul(a, series[t]);
        const SmallMat xb = SmallMul(series[t], b);
        SmallMat e = SmallMul(ax, b);
        for (std::size_t i = 0; i < e.v.size(); ++i) e.v[i] = series[t + 1].v[i] - e.v[i];
        const SmallMat da = SmallMul(e, SmallT(xb));
        const SmallMat db = SmallMul(SmallT(ax), e);
        for (std::size_t i = 0; i < n * n; ++i) {
          ga.v[i] -= 2.0 * da.v[i];
          gb.v[i] -= 2.0 * db.v[i];
        }
      }
      for (;;) {
        SmallMat a2 = a;
        SmallMat b2 = b;
        for (std::size_t i = 0; i < n * n; ++i) {
          a2.v[i] -= step * ga.v[i];
          b2.v[i] -= step * gb.v[i];
        }
        const double l2 = OracleMarLoss(series, a2, b2);
        if (l2 <= loss) {
          a = std::move(a2);
          b = std::move(b2);
          loss = l2;
          step *= 1.5;
          break;
        }
        step *= 0.5;
        if (step < 1e-20) break;
      }
      if (step < 1e-20) break;
    }
    best = std::min(best, loss);
  }
  return best;
}

}  // namespace flsim::testing

#endif  // FLSIM_TESTS_SUPPORT_ORACLES_HPP_
