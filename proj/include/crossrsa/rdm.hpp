#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crossrsa/matrix.hpp"

namespace crossrsa {

enum class DistanceMetric { correlation };

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_distance_metric(std::string_view text);

/// Symmetry tolerance accepted for Rdm matrices.
inline constexpr double kRdmSymmetryTolerance = 1e-10;

/// Where a feature matrix came from. For neural data `condition` holds the
/// species and `layer` the region.
struct Provenance {
  std::string condition;  // learning rule, model label, or species
  long long seed = 0;
  std::string layer;      // layer or region label

  bool operator==(const Provenance&) const = default;
};

/// Stimuli x features activations.
struct FeatureMatrix {
  std::vector<std::string> stimulus_ids;
  Matrix features;
  Provenance provenance;

  std::size_t n_stimuli() const { return features.rows(); }
  std::size_t n_features() const { return features.cols(); }

  /// Throws DataError unless row count matches IDs, IDs are unique, every
  /// value is finite and there are at least two features.
  void validate() const;

  bool operator==(const FeatureMatrix&) const = default;
};

/// Symmetric stimulus x stimulus dissimilarity matrix.
struct Rdm {
  std::vector<std::string> stimulus_ids;
  Matrix matrix;
  DistanceMetric metric = DistanceMetric::correlation;

  std::size_t size() const { return matrix.rows(); }

  /// Symmetric within kRdmSymmetryTolerance, zero diagonal, correlation
  /// distances in [0, 2]. Throws DataError otherwise.
  void validate() const;
};

/// Correlation-distance RDM: entry (i, j) = 1 - pearson(row_i, row_j).
/// OpenMP-parallel over rows; see reference::compute_rdm for the serial kernel.
Rdm compute_rdm(const FeatureMatrix& fm, DistanceMetric metric = DistanceMetric::correlation);

/// Strict upper triangle in row-major order, length m(m-1)/2.
std::vector<double> upper_triangle(const Rdm& rdm);

/// Spearman rho between upper triangles. Stimulus IDs must match in order.
double rsa_score(const Rdm& model, const Rdm& neural);

/// Throws DataError naming the first divergence if the two ID lists differ.
void require_same_stimuli(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Restrict a feature matrix to a subset of its columns (order preserved).
FeatureMatrix select_columns(const FeatureMatrix& fm, const std::vector<std::size_t>& columns);

namespace reference {

/// Serial pairwise kernel kept as the test oracle for crossrsa::compute_rdm.
Rdm compute_rdm(const FeatureMatrix& fm, DistanceMetric metric = DistanceMetric::correlation);

}  // namespace reference

}  // namespace crossrsa
