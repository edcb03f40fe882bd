#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idil/autodiff.hpp"

namespace idil::mahalanobis {

// Class-conditional Gaussians with one shared covariance.
struct GaussianStats {
  std::vector<std::vector<double>> class_means;  // one per label
  std::vector<double> precision;                 // d x d, row-major, inverse of (cov + eps I)
  double shrinkage_eps = 0.0;
  std::size_t feature_dim = 0;

  // min over classes of (x - mu_c)^T P (x - mu_c)
  double score(std::span<const double> x) const;
  // Row-wise score() of an [n x d] tensor.
  std::vector<double> scores(const ad::Tensor& features) const;
  // Negated scores: higher means more in-distribution.
  std::vector<double> confidences(const ad::Tensor& features) const;
};

// Shrinkage used when none is given: 1e-6 * trace(cov) / d, or 1e-6 when the
// covariance is identically zero.
double default_shrinkage(double trace, std::size_t dim);

// Per-class means and the pooled within-class covariance (scatter / n),
// regularised by eps * I and inverted. Every label in [0, num_labels) needs
// at least two samples.
GaussianStats fit(const ad::Tensor& features, std::span<const std::size_t> labels, std::size_t num_labels,
                  std::optional<double> eps = std::nullopt);

void save(const GaussianStats& stats, const std::filesystem::path& path);
GaussianStats load(const std::filesystem::path& path);

}  // namespace idil::mahalanobis
