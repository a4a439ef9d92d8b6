#include "crossrsa/rdm.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "crossrsa/error.hpp"
#include "crossrsa/stats.hpp"

namespace crossrsa {

std::string_view to_string(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::correlation:
      return "correlation";
  }
  return "unknown";
}

DistanceMetric parse_distance_metric(std::string_view text) {
  if (text == "correlation") return DistanceMetric::correlation;
  throw ConfigError("unknown distance metric '" + std::string(text) + "'");
}

void FeatureMatrix::validate() const {
  if (features.rows() != stimulus_ids.size()) {
    throw DataError("FeatureMatrix: " + std::to_string(features.rows()) + " rows but " +
                    std::to_string(stimulus_ids.size()) + " stimulus IDs");
  }
  if (features.cols() < 2) {
    throw DataError("FeatureMatrix: need at least 2 features, got " + std::to_string(features.cols()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : stimulus_ids) {
    if (!seen.insert(id).second) throw DataError("FeatureMatrix: duplicate stimulus ID '" + id + "'");
  }
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (double v : features.row(r)) {
      if (!std::isfinite(v)) throw DataError("FeatureMatrix: non-finite value for stimulus '" + stimulus_ids[r] + "'");
    }
  }
}

void Rdm::validate() const {
  const std::size_t m = matrix.rows();
  if (matrix.cols() != m) throw DataError("Rdm: matrix is not square");
  if (stimulus_ids.size() != m) throw DataError("Rdm: stimulus ID count does not match dimension");
  for (std::size_t i = 0; i < m; ++i) {
    if (matrix(i, i) != 0.0) throw DataError("Rdm: nonzero diagonal at '" + stimulus_ids[i] + "'");
    for (std::size_t j = i + 1; j < m; ++j) {
      const double a = matrix(i, j);
      const double b = matrix(j, i);
      if (!std::isfinite(a) || !std::isfinite(b)) throw DataError("Rdm: non-finite entry");
      if (std::abs(a - b) > kRdmSymmetryTolerance) {
        throw DataError("Rdm: asymmetric entry (" + stimulus_ids[i] + ", " + stimulus_ids[j] + ")");
      }
      if (metric == DistanceMetric::correlation && (a < 0.0 || a > 2.0)) {
        throw DataError("Rdm: correlation distance outside [0, 2]");
      }
    }
  }
}

void require_same_stimuli(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) {
      throw DataError("stimulus mismatch at position " + std::to_string(i) + ": '" + a[i] + "' vs '" + b[i] + "'");
    }
  }
  if (a.size() != b.size()) {
    throw DataError("stimulus count mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

namespace {

void check_rdm_input(const FeatureMatrix& fm) {
  fm.validate();
  if (fm.n_stimuli() < 3) {
    throw ConfigError("compute_rdm: need at least 3 stimuli, got " + std::to_string(fm.n_stimuli()));
  }
}

[[noreturn]] void throw_constant_row(const FeatureMatrix& fm, std::size_t row) {
  throw DegenerateInputError("compute_rdm: stimulus '" + fm.stimulus_ids[row] + "' has a constant feature row");
}

}  // namespace

Rdm compute_rdm(const FeatureMatrix& fm, DistanceMetric metric) {
  check_rdm_input(fm);
  const std::size_t m = fm.n_stimuli();
  const std::size_t k = fm.n_features();

  // Centre each row and scale it to unit norm; Pearson is then a dot product.
  Matrix z(m, k);
  std::vector<char> constant(m, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    const auto src = fm.features.row(i);
    auto dst = z.row(i);
    double mu = 0.0;
    for (double v : src) mu += v;
    mu /= static_cast<double>(k);
    double ss = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      dst[c] = src[c] - mu;
      ss += dst[c] * dst[c];
    }
    if (negligible_spread(ss, src)) {
      constant[i] = 1;
      continue;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& v : dst) v *= inv;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (constant[i]) throw_constant_row(fm, i);
  }

  Rdm rdm{fm.stimulus_ids, Matrix(m, m), metric};
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t i = 0; i < m; ++i) {
    const auto zi = z.row(i);
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto zj = z.row(j);
      double dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) dot += zi[c] * zj[c];
      const double d = 1.0 - std::clamp(dot, -1.0, 1.0);
      rdm.matrix(i, j) = d;
      rdm.matrix(j, i) = d;
    }
  }
  return rdm;
}

std::vector<double> upper_triangle(const Rdm& rdm) {
  rdm.validate();
  const std::size_t m = rdm.size();
  std::vector<double> out;
  out.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) out.push_back(rdm.matrix(i, j));
  }
  return out;
}

double rsa_score(const Rdm& model, const Rdm& neural) {
  require_same_stimuli(model.stimulus_ids, neural.stimulus_ids);
  return spearman(upper_triangle(model), upper_triangle(neural));
}

FeatureMatrix select_columns(const FeatureMatrix& fm, const std::vector<std::size_t>& columns) {
  FeatureMatrix out{fm.stimulus_ids, Matrix(fm.n_stimuli(), columns.size()), fm.provenance};
  for (std::size_t r = 0; r < fm.n_stimuli(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out.features(r, c) = fm.features(r, columns[c]);
  }
  return out;
}

namespace reference {

Rdm compute_rdm(const FeatureMatrix& fm, DistanceMetric metric) {
  check_rdm_input(fm);
  const std::size_t m = fm.n_stimuli();
  Rdm rdm{fm.stimulus_ids, Matrix(m, m), metric};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double r = 0.0;
      try {
        r = pearson(fm.features.row(i), fm.features.row(j));
      } catch (const DegenerateInputError&) {
        const auto row = fm.features.row(i);
        const bool i_constant = std::all_of(row.begin(), row.end(), [&](double v) { return v == row[0]; });
        throw_constant_row(fm, i_constant ? i : j);
      }
      rdm.matrix(i, j) = 1.0 - r;
      rdm.matrix(j, i) = 1.0 - r;
    }
  }
  return rdm;
}

}  // namespace reference

}  // namespace crossrsa
