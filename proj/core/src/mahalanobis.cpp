#include "idil/mahalanobis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "idil/error.hpp"
#include "idil/io.hpp"

namespace idil::mahalanobis {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double default_shrinkage(double trace, std::size_t dim) {
  const double scaled = 1e-6 * trace / static_cast<double>(dim);
  return scaled > 0.0 ? scaled : 1e-6;
}

GaussianStats fit(const ad::Tensor& features, std::span<const std::size_t> labels, std::size_t num_labels,
                  std::optional<double> eps) {
  if (features.rank() != 2) throw ShapeError("mahalanobis fit: features must be a 2-D tensor");
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (labels.size() != n) {
    throw ShapeError("mahalanobis fit: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                     " feature rows");
  }
  if (eps && !(*eps >= 0.0)) throw ConfigError("mahalanobis fit: shrinkage must be non-negative");
  for (double v : features.values())
    if (!std::isfinite(v)) throw NumericError("mahalanobis fit: non-finite feature value");

  const Eigen::Map<const Matrix> x(features.values().data(), static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(d));
  std::vector<std::size_t> counts(num_labels, 0);
  for (auto y : labels) {
    if (y >= num_labels) throw IndexError(0, y, num_labels);
    ++counts[y];
  }
  for (std::size_t c = 0; c < num_labels; ++c) {
    if (counts[c] < 2) {
      throw DataError("mahalanobis fit: label " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                      " sample(s); at least 2 are required");
    }
  }

  Matrix means = Matrix::Zero(static_cast<Eigen::Index>(num_labels), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) means.row(static_cast<Eigen::Index>(labels[i])) += x.row(static_cast<Eigen::Index>(i));
  for (std::size_t c = 0; c < num_labels; ++c) means.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);

  Matrix centered(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    centered.row(static_cast<Eigen::Index>(i)) =
        x.row(static_cast<Eigen::Index>(i)) - means.row(static_cast<Eigen::Index>(labels[i]));
  }
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);

  const double shrink = eps ? *eps : default_shrinkage(cov.trace(), d);
  cov += shrink * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("mahalanobis fit: covariance is not positive definite; increase the shrinkage");
  }
  Matrix precision = llt.solve(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  precision = 0.5 * (precision + precision.transpose()).eval();

  GaussianStats stats;
  stats.feature_dim = d;
  stats.shrinkage_eps = shrink;
  stats.precision.assign(precision.data(), precision.data() + precision.size());
  for (std::size_t c = 0; c < num_labels; ++c) {
    const auto row = means.row(static_cast<Eigen::Index>(c));
    stats.class_means.emplace_back(row.data(), row.data() + d);
  }
  return stats;
}

double GaussianStats::score(std::span<const double> x) const {
  if (x.size() != feature_dim) {
    throw ShapeError("mahalanobis score: expected " + std::to_string(feature_dim) + " features, got " +
                     std::to_string(x.size()));
  }
  const auto d = static_cast<Eigen::Index>(feature_dim);
  const Eigen::Map<const Matrix> p(precision.data(), d, d);
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& mu : class_means) {
    const Eigen::VectorXd diff = xv - Eigen::Map<const Eigen::VectorXd>(mu.data(), d);
    best = std::min(best, diff.dot(p * diff));
  }
  return std::max(0.0, best);
}

std::vector<double> GaussianStats::scores(const ad::Tensor& features) const {
  const std::size_t d = features.cols();
  std::vector<double> out(features.rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = score(features.values().subspan(r * d, d));
  return out;
}

std::vector<double> GaussianStats::confidences(const ad::Tensor& features) const {
  auto out = scores(features);
  for (auto& v : out) v = -v;
  return out;
}

void save(const GaussianStats& stats, const std::filesystem::path& path) {
  nlohmann::json j = {
      {"format", "idil-ood-mahalanobis"},
      {"version", 1},
      {"feature_dim", stats.feature_dim},
      {"shrinkage_eps", stats.shrinkage_eps},
      {"class_means", stats.class_means},
      {"precision", stats.precision},
  };
  io::write_text(path, j.dump() + "\n");
}

GaussianStats load(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(io::read_text(path));
    GaussianStats s;
    s.feature_dim = j.at("feature_dim").get<std::size_t>();
    s.shrinkage_eps = j.at("shrinkage_eps").get<double>();
    s.class_means = j.at("class_means").get<std::vector<std::vector<double>>>();
    s.precision = j.at("precision").get<std::vector<double>>();
    if (s.precision.size() != s.feature_dim * s.feature_dim) {
      throw ParseError(path.string(), 0, "precision matrix has the wrong size");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

}  // namespace idil::mahalanobis
