// Copyright 2026 The proxforest Authors
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
#include "proxforest/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "proxforest/csv.hpp"
#include "proxforest/error.hpp"
#include "proxforest/log.hpp"
#include "proxforest/random.hpp"

namespace proxforest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPowerTolerance = 1e-10;
constexpr std::size_t kPowerMaxIterations = 10000;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<double> multiply(const Matrix& a, const std::vector<double>& v) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * v[j];
    out[i] = s;
  }
  return out;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Removes the components of v along the (orthonormal) vectors in `basis`.
void project_out(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& u : basis) {
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) d += u[i] * v[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * u[i];
  }
}

struct Eigenpair {
  double value = 0.0;
  std::vector<double> vector;
  bool converged = false;
};

/// Dominant eigenpair of the symmetric matrix b + shift * I restricted to the
/// orthogonal complement of `found`, with the shift removed from the value.
Eigenpair power_iteration(const Matrix& b, double shift, Rng& rng, const std::vector<std::vector<double>>& found) {
  const std::size_t n = b.rows();
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  project_out(v, found);
  double nv = norm(v);
  for (double& x : v) x /= nv;
  Eigenpair e;
  for (std::size_t it = 0; it < kPowerMaxIterations; ++it) {
    std::vector<double> w = multiply(b, v);
    for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
    project_out(w, found);
    const double nw = norm(w);
    if (nw == 0.0) {
      e.value = -shift;
      e.vector = v;
      e.converged = true;
      return e;
    }
    for (double& x : w) x /= nw;
    double same = 0.0, flipped = 0.0;  // a negative eigenvalue flips the sign each step
    for (std::size_t i = 0; i < n; ++i) {
      same = std::max(same, std::abs(w[i] - v[i]));
      flipped = std::max(flipped, std::abs(w[i] + v[i]));
    }
    const double diff = std::min(same, flipped);
    v = std::move(w);
    if (diff < kPowerTolerance) {
      e.converged = true;
      break;
    }
  }
  const std::vector<double> bv = multiply(b, v);
  double rq = 0.0;
  for (std::size_t i = 0; i < n; ++i) rq += v[i] * bv[i];
  e.value = rq;
  e.vector = std::move(v);
  return e;
}

}  // namespace

OutlierReport outlier_scores(const GapMatrix& oob, std::span<const int> labels, std::size_t top_q) {
  if (labels.size() != oob.column_count) throw DataError("outlier_scores: one label per training instance required");
  const Dissimilarity sym = symmetrize_and_dissimilarity(oob);
  const std::size_t m = sym.indices.size();
  OutlierReport report;
  report.top_q = top_q;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t a = 0; a < m; ++a) {
    OutlierRecord r;
    r.index = sym.indices[a];
    r.label = labels[r.index];
    double s = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      if (b != a && labels[sym.indices[b]] == r.label) s += sym.proximity(a, b) * sym.proximity(a, b);
    }
    r.raw = s > 0.0 ? 1.0 / s : kInf;
    by_class[r.label].push_back(a);
    report.records.push_back(r);
  }
  for (auto& [label, rows] : by_class) {
    if (rows.size() < 3) {
      for (std::size_t a : rows) {
        report.records[a].normalized = report.records[a].raw;
        report.records[a].normalized_valid = false;
      }
    } else {
      std::vector<double> finite;
      for (std::size_t a : rows) {
        if (std::isfinite(report.records[a].raw)) finite.push_back(report.records[a].raw);
      }
      const double med = finite.empty() ? 0.0 : median(finite);
      std::vector<double> dev;
      for (double v : finite) dev.push_back(std::abs(v - med));
      const double mad = dev.empty() ? 0.0 : median(dev);
      for (std::size_t a : rows) {
        auto& r = report.records[a];
        const double z = mad > 0.0 ? (r.raw - med) / mad : r.raw - med;
        r.normalized = std::max(0.0, z);
      }
    }
    std::vector<std::size_t> order = rows;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return report.records[a].normalized > report.records[b].normalized;
    });
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& r = report.records[order[k]];
      if (k < top_q || std::isinf(r.raw)) r.flagged = true;
    }
  }
  return report;
}

Matrix double_center(const Matrix& d) {
  const std::size_t n = d.rows();
  Matrix b(n, n);
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double sq = d(i, j) * d(i, j);
      b(i, j) = sq;
      row_mean[i] += sq;
    }
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) b(i, j) = -0.5 * (b(i, j) - row_mean[i] - row_mean[j] + grand);
  }
  return b;
}

MdsResult classical_mds(const Matrix& dissimilarity, std::size_t dims) {
  const std::size_t n = dissimilarity.rows();
  if (dissimilarity.cols() != n) throw DataError("mds: dissimilarity matrix must be square");
  if (dims == 0) throw ConfigError("mds: dims must be at least 1");
  if (dims > n) throw DataError("mds: dims (" + std::to_string(dims) + ") exceeds the number of points (" +
                                std::to_string(n) + ")");
  for (std::size_t i = 0; i < n; ++i) {
    if (dissimilarity(i, i) != 0.0) throw DataError("mds: dissimilarity diagonal must be zero");
    for (std::size_t j = 0; j < i; ++j) {
      const double a = dissimilarity(i, j), b = dissimilarity(j, i);
      if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
        throw DataError("mds: dissimilarity matrix must be symmetric");
      }
    }
  }
  const Matrix b = double_center(dissimilarity);
  MdsResult out;
  out.coordinates = Matrix(n, dims);
  Rng rng = make_rng(0x6d6473);
  std::vector<std::vector<double>> found;
  double scale_ref = 0.0;
  for (std::size_t k = 0; k < dims; ++k) {
    Eigenpair e = power_iteration(b, 0.0, rng, found);
    if (e.value < 0.0) {
      // The dominant eigenvalue is negative; shift the spectrum so the largest
      // algebraic one dominates instead.
      e = power_iteration(b, -e.value, rng, found);
    }
    out.converged.push_back(e.converged);
    if (!e.converged) out.warnings.push_back("eigenvector " + std::to_string(k) + " did not converge");
    double lambda = e.value;
    scale_ref = std::max(scale_ref, std::abs(lambda));
    if (lambda < 0.0 && -lambda <= 1e-9 * scale_ref) lambda = 0.0;  // roundoff around a zero eigenvalue
    if (lambda < 0.0) {
      out.warnings.push_back("eigenvalue " + std::to_string(k) + " is negative (" + csv::format_double(lambda) +
                             "); truncated to zero");
      lambda = 0.0;
    }
    out.eigenvalues.push_back(lambda);
    const double scale = std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i) out.coordinates(i, k) = e.vector[i] * scale;
    found.push_back(std::move(e.vector));
  }
  for (const auto& w : out.warnings) log_warning("mds: " + w);
  return out;
}

void write_outliers(const OutlierReport& r, const Dataset& train, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  csv::write_row(out, {"id", "class", "raw", "normalized", "flag"});
  for (const auto& rec : r.records) {
    csv::write_row(out, {train.instances[rec.index].id, train.class_names[static_cast<std::size_t>(rec.label)],
                         csv::format_double(rec.raw), csv::format_double(rec.normalized), rec.flagged ? "1" : "0"});
  }
}

void write_embedding(const MdsResult& m, const std::vector<std::string>& ids, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> fields{"id"};
  for (std::size_t k = 0; k < m.coordinates.cols(); ++k) fields.push_back("x" + std::to_string(k + 1));
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < m.coordinates.rows(); ++i) {
    fields.assign(1, ids[i]);
    for (std::size_t k = 0; k < m.coordinates.cols(); ++k) fields.push_back(csv::format_double(m.coordinates(i, k)));
    csv::write_row(out, fields);
  }
}

}  // namespace proxforest
