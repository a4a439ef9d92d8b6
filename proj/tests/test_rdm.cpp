#include <gtest/gtest.h>

#include <cmath>

#include "crossrsa/error.hpp"
#include "crossrsa/rdm.hpp"
#include "crossrsa/rng.hpp"
#include "oracle.hpp"

using namespace crossrsa;

namespace {

FeatureMatrix random_features(std::size_t m, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix fm;
  fm.features = Matrix(m, k);
  for (auto& v : fm.features.data()) v = rng.normal();
  for (std::size_t i = 0; i < m; ++i) fm.stimulus_ids.push_back("s" + std::to_string(i));
  fm.provenance = {"BP", 0, "Conv1"};
  return fm;
}

std::vector<std::vector<double>> rows_of(const FeatureMatrix& fm) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < fm.n_stimuli(); ++i) rows.emplace_back(fm.features.row(i).begin(), fm.features.row(i).end());
  return rows;
}

}  // namespace

TEST(Rdm, MatchesTextbookCorrelationDistance) {
  const auto fm = random_features(12, 30, 1);
  const auto rdm = compute_rdm(fm);
  const auto want = oracle::rdm(rows_of(fm));
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(rdm.matrix(i, j), want[i][j], 1e-12);
  }
  EXPECT_NO_THROW(rdm.validate());
}

TEST(Rdm, ParallelKernelEqualsSerialReference) {
  const auto fm = random_features(40, 64, 2);
  const auto a = compute_rdm(fm);
  const auto b = reference::compute_rdm(fm);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) EXPECT_NEAR(a.matrix(i, j), b.matrix(i, j), 1e-12);
  }
}

TEST(Rdm, SymmetricZeroDiagonalAndBounded) {
  const auto rdm = compute_rdm(random_features(20, 5, 3));
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(rdm.matrix(i, i), 0.0);
    for (std::size_t j = 0; j < 20; ++j) {
      EXPECT_EQ(rdm.matrix(i, j), rdm.matrix(j, i));
      EXPECT_GE(rdm.matrix(i, j), 0.0);
      EXPECT_LE(rdm.matrix(i, j), 2.0);
    }
  }
}

TEST(Rdm, UpperTriangleOrder) {
  const auto rdm = compute_rdm(random_features(6, 4, 4));
  const auto u = upper_triangle(rdm);
  ASSERT_EQ(u.size(), 15u);
  std::vector<std::vector<double>> d(6, std::vector<double>(6));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) d[i][j] = rdm.matrix(i, j);
  }
  EXPECT_EQ(u, oracle::upper(d));
}

TEST(Rdm, AffineFeatureTransformsLeaveRdmUnchanged) {
  auto fm = random_features(10, 8, 5);
  const auto before = compute_rdm(fm);
  for (std::size_t i = 0; i < fm.n_stimuli(); ++i) {
    for (auto& v : fm.features.row(i)) v = 3.0 * v + static_cast<double>(i);
  }
  const auto after = compute_rdm(fm);
  for (std::size_t k = 0; k < before.matrix.data().size(); ++k) {
    EXPECT_NEAR(before.matrix.data()[k], after.matrix.data()[k], 1e-12);
  }
}

TEST(Rdm, ConstantRowNamesTheStimulus) {
  auto fm = random_features(5, 4, 6);
  for (auto& v : fm.features.row(3)) v = 2.5;
  try {
    compute_rdm(fm);
    FAIL() << "expected DegenerateInputError";
  } catch (const DegenerateInputError& e) {
    EXPECT_NE(std::string(e.what()).find("s3"), std::string::npos);
  }
}

TEST(Rdm, TooFewStimuli) { EXPECT_THROW(compute_rdm(random_features(2, 4, 7)), ConfigError); }

TEST(RsaScore, SelfComparisonIsOne) {
  const auto rdm = compute_rdm(random_features(15, 10, 8));
  EXPECT_DOUBLE_EQ(rsa_score(rdm, rdm), 1.0);
}

TEST(RsaScore, StimulusOrderMustMatch) {
  const auto a = compute_rdm(random_features(6, 4, 9));
  auto b = a;
  std::swap(b.stimulus_ids[1], b.stimulus_ids[2]);
  try {
    rsa_score(a, b);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
  }
}

TEST(Rdm, ValidateRejectsAsymmetry) {
  auto rdm = compute_rdm(random_features(5, 4, 10));
  rdm.matrix(0, 1) += 1e-6;
  EXPECT_THROW(rdm.validate(), DataError);
}

TEST(FeatureMatrix, ValidateRejectsDuplicatesAndNonFinite) {
  auto fm = random_features(4, 3, 11);
  fm.stimulus_ids[2] = "s0";
  EXPECT_THROW(fm.validate(), DataError);
  fm = random_features(4, 3, 11);
  fm.features(1, 1) = NAN;
  EXPECT_THROW(fm.validate(), DataError);
}

TEST(FeatureMatrix, SelectColumns) {
  const auto fm = random_features(4, 6, 12);
  const auto sub = select_columns(fm, {4, 1});
  ASSERT_EQ(sub.n_features(), 2u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(sub.features(i, 0), fm.features(i, 4));
    EXPECT_EQ(sub.features(i, 1), fm.features(i, 1));
  }
}
