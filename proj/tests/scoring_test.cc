// Copyright 2026 The OXN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <vector>

#include "oxn/scoring.h"

namespace oxn {
namespace {

TEST(VisibilityTest, StrictThreshold) {
  EXPECT_EQ(visibility(0.83, 0.7), 1);
  EXPECT_EQ(visibility(0.61, 0.7), 0);
  EXPECT_EQ(visibility(0.7, 0.7), 0);
  EXPECT_EQ(visibility(1.0, 0.7), 1);
  EXPECT_EQ(visibility(0.0, 0.0), 0);
}

TEST(FaultCoverageTest, ExactRatios) {
  const std::vector<int> all{1, 1, 1}, one{1, 0, 0}, none{0, 0, 0};
  EXPECT_TRUE(fault_coverage(all).identical(Ratio{3, 3}));
  EXPECT_TRUE(fault_coverage(one).identical(Ratio{1, 3}));
  EXPECT_TRUE(fault_coverage(none).identical(Ratio{0, 3}));
  EXPECT_EQ(fault_coverage(all).str(), "3/3");
}

TEST(FaultCoverageTest, EmptyThrows) {
  EXPECT_THROW(fault_coverage(std::vector<int>{}), Error);
  EXPECT_THROW(overall_fault_observability(std::vector<Ratio>{}), Error);
}

TEST(OverallFaultObservabilityTest, CountsCoveredFaults) {
  const std::vector<Ratio> fc{{3, 3}, {1, 3}, {0, 3}};
  EXPECT_TRUE(overall_fault_observability(fc).identical(Ratio{2, 3}));
  const std::vector<Ratio> zero{{0, 3}, {0, 3}};
  EXPECT_TRUE(overall_fault_observability(zero).identical(Ratio{0, 2}));
}

TEST(RatioTest, ParseAndCompare) {
  EXPECT_TRUE(Ratio::parse("2/3").identical(Ratio{2, 3}));
  EXPECT_EQ(Ratio::parse("2/4"), (Ratio{1, 2}));
  EXPECT_FALSE(Ratio::parse("2/4").identical(Ratio{1, 2}));
  EXPECT_LT((Ratio{1, 3}), (Ratio{1, 2}));
  EXPECT_THROW(Ratio::parse("3"), Error);
  EXPECT_THROW(Ratio::parse("4/3"), Error);
  EXPECT_THROW(Ratio::parse("a/b"), Error);
}

// Independent oracle: counts directly over the flat bit pattern.
struct BruteScore {
  std::vector<int> fc_num;
  int ofo_num = 0;
};

BruteScore brute_force(unsigned bits, int l, int n) {
  BruteScore s;
  for (int f = 0; f < l; ++f) {
    int visible = 0;
    for (int m = 0; m < n; ++m) visible += (bits >> (f * n + m)) & 1u;
    s.fc_num.push_back(visible);
    if (visible != 0) ++s.ofo_num;
  }
  return s;
}

TEST(ScoreTest, ExhaustiveOracleEquivalence) {
  for (int l : {2, 3}) {
    for (int n : {2, 3}) {
      std::vector<std::string> faults, responses;
      for (int f = 0; f < l; ++f) faults.push_back("f" + std::to_string(f));
      for (int m = 0; m < n; ++m) responses.push_back("m" + std::to_string(m));
      for (unsigned bits = 0; bits < (1u << (l * n)); ++bits) {
        std::vector<std::vector<std::optional<double>>> df(l, std::vector<std::optional<double>>(n));
        for (int f = 0; f < l; ++f) {
          for (int m = 0; m < n; ++m) df[f][m] = ((bits >> (f * n + m)) & 1u) ? 0.9 : 0.5;
        }
        const auto report = score(VisibilityMatrix::from_df(faults, responses, df, 0.7));
        const auto oracle = brute_force(bits, l, n);
        ASSERT_EQ(report.fault_coverage.size(), static_cast<std::size_t>(l));
        for (int f = 0; f < l; ++f) {
          ASSERT_TRUE(report.fault_coverage[f].identical(Ratio{oracle.fc_num[f], n}));
        }
        ASSERT_TRUE(report.ofo.identical(Ratio{oracle.ofo_num, l}));
      }
    }
  }
}

TEST(ScoreTest, UndefinedDfIsInvisible) {
  std::vector<std::vector<std::optional<double>>> df{{std::nullopt, 0.9}};
  const auto m = VisibilityMatrix::from_df({"f"}, {"a", "b"}, df, 0.7);
  EXPECT_EQ(m.cells[0][0].v, 0);
  EXPECT_FALSE(m.cells[0][0].df.has_value());
  EXPECT_TRUE(score(m).fault_coverage[0].identical(Ratio{1, 2}));
}

TEST(ScoreTest, MonotoneInVisibility) {
  // Flipping any cell 0 -> 1 never lowers FC or OFO.
  const int l = 3, n = 3;
  std::vector<std::string> faults{"a", "b", "c"}, responses{"x", "y", "z"};
  auto build = [&](unsigned bits) {
    std::vector<std::vector<std::optional<double>>> df(l, std::vector<std::optional<double>>(n));
    for (int f = 0; f < l; ++f) {
      for (int m = 0; m < n; ++m) df[f][m] = ((bits >> (f * n + m)) & 1u) ? 1.0 : 0.0;
    }
    return score(VisibilityMatrix::from_df(faults, responses, df, 0.7));
  };
  for (unsigned bits = 0; bits < (1u << 9); ++bits) {
    const auto before = build(bits);
    for (int k = 0; k < 9; ++k) {
      if (bits & (1u << k)) continue;
      const auto after = build(bits | (1u << k));
      for (int f = 0; f < l; ++f) ASSERT_GE(after.fault_coverage[f], before.fault_coverage[f]);
      ASSERT_GE(after.ofo, before.ofo);
    }
  }
}

TEST(DiffScoresTest, DeltasAndMismatch) {
  ScoreReport base{{"pause", "loss", "delay"}, {{3, 3}, {1, 3}, {0, 3}}, {2, 3}, 3, 3};
  ScoreReport alt{{"pause", "loss", "delay"}, {{3, 3}, {1, 3}, {1, 3}}, {3, 3}, 3, 3};
  const auto d = diff_scores(base, alt);
  EXPECT_EQ(d.fc_delta, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(d.fc_delta_total, 1);
  EXPECT_EQ(d.ofo_delta, 1);

  const auto self = diff_scores(base, base);
  EXPECT_EQ(self.fc_delta_total, 0);
  EXPECT_EQ(self.ofo_delta, 0);

  ScoreReport wider = alt;
  wider.n = 4;
  EXPECT_THROW(diff_scores(base, wider), Error);
}

}  // namespace
}  // namespace oxn
