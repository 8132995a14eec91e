#pragma once

// Singular-value spectrum of feature matrices and the entropy of normalized singular values.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "poseaug/error.hpp"

namespace poseaug {

/// Row-major N x D matrix, one sample per row.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(int n, int d) : rows(n), cols(d), values(static_cast<std::size_t>(n) * d, 0.0) {}
  FeatureMatrix(int n, int d, std::vector<double> v) : rows(n), cols(d), values(std::move(v)) {
    if (values.size() != static_cast<std::size_t>(n) * d) throw DimensionMismatch("FeatureMatrix: value count mismatch");
  }

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  [[nodiscard]] double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// Subtracts each column's mean.
inline FeatureMatrix centered(FeatureMatrix f) {
  for (int c = 0; c < f.cols; ++c) {
    double mean = 0.0;
    for (int r = 0; r < f.rows; ++r) mean += f.at(r, c);
    mean /= std::max(1, f.rows);
    for (int r = 0; r < f.rows; ++r) f.at(r, c) -= mean;
  }
  return f;
}

/// Singular values in descending order, by one-sided Jacobi rotations on the columns.
inline std::vector<double> svd_spectrum(const FeatureMatrix& f) {
  if (f.cols <= 0 || f.rows <= 0) throw InvalidParameter("svd_spectrum: empty matrix");
  if (f.cols > f.rows) throw InvalidParameter("svd_spectrum: need D <= N");
  for (double v : f.values) {
    if (!std::isfinite(v)) throw InvalidParameter("svd_spectrum: non-finite feature value");
  }
  const int n = f.rows;
  const int d = f.cols;
  // Column-major working copy.
  std::vector<double> a(static_cast<std::size_t>(n) * d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) a[static_cast<std::size_t>(c) * n + r] = f.at(r, c);
  }
  auto col = [&](int c) { return a.data() + static_cast<std::size_t>(c) * n; };
  constexpr double tol = 1e-15;
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        double* x = col(p);
        double* y = col(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < n; ++i) {
          alpha += x[i] * x[i];
          beta += y[i] * y[i];
          gamma += x[i] * y[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < n; ++i) {
          const double xi = x[i];
          x[i] = c * xi - s * y[i];
          y[i] = s * xi + c * y[i];
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sigma(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) {
    const double* x = col(c);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * x[i];
    sigma[static_cast<std::size_t>(c)] = std::sqrt(s);
  }
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

/// H = -sum p_i ln p_i with p_i = sigma_i / sum(sigma); zero terms contribute nothing.
inline double nsv_entropy(std::span<const double> sigma) {
  double total = 0.0;
  for (double s : sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidParameter("nsv_entropy: singular values must be finite and >= 0");
    total += s;
  }
  if (!(total > 0.0)) throw InvalidParameter("nsv_entropy: all-zero spectrum");
  double h = 0.0;
  for (double s : sigma) {
    if (s == 0.0) continue;
    const double p = s / total;
    h -= p * std::log(p);
  }
  return h;
}

struct SpectrumReport {
  /// Leading singular values, at most top_k of them.
  std::vector<double> sigma;
  /// Entropy of the full spectrum.
  double entropy = 0.0;
  int dimension = 0;
};

inline SpectrumReport spectrum_report(const FeatureMatrix& f, int top_k = 50, bool center = false) {
  if (top_k <= 0) throw InvalidParameter("spectrum_report: top_k must be positive");
  const std::vector<double> full = svd_spectrum(center ? centered(f) : f);
  SpectrumReport r;
  r.entropy = nsv_entropy(full);
  r.dimension = f.cols;
  r.sigma.assign(full.begin(), full.begin() + std::min<std::ptrdiff_t>(top_k, static_cast<std::ptrdiff_t>(full.size())));
  return r;
}

/// `H_nsv,<value>` header line, then `rank,sigma` rows.
inline std::string spectrum_csv(const SpectrumReport& r) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "H_nsv,%.17g\n", r.entropy);
  std::string out = buf;
  out += "rank,sigma\n";
  for (std::size_t i = 0; i < r.sigma.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, r.sigma[i]);
    out += buf;
  }
  return out;
}

}  // namespace poseaug
