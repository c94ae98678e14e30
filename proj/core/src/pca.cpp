#include "latentmos/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentmos/error.hpp"

namespace lmos {

SymmetricEigen jacobi_eigen(const Tensor& sym) {
  if (sym.shape().size() != 2 || sym.shape()[0] != sym.shape()[1])
    throw DimensionError("jacobi_eigen: matrix must be square");
  const int n = sym.shape()[0];
  Tensor a = sym;
  Tensor v = Tensor::identity(n);
  auto at = [&](Tensor& t, int r, int c) -> double& { return t[static_cast<std::int64_t>(r) * n + c]; };

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        const double m = std::abs(at(a, p, q));
        if (p == q)
          diag = std::max(diag, m);
        else
          off = std::max(off, m);
      }
    if (off <= 1e-15 * std::max(1.0, diag)) break;

    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k), aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return at(a, i, i) > at(a, j, j); });

  SymmetricEigen out;
  out.vectors = Tensor::zeros({n, n});
  for (int r = 0; r < n; ++r) {
    const int src = order[static_cast<std::size_t>(r)];
    out.values.push_back(at(a, src, src));
    for (int k = 0; k < n; ++k) at(out.vectors, r, k) = at(v, k, src);
  }
  return out;
}

Pca2 pca_fit_2d(const std::vector<Tensor>& points) {
  if (points.empty()) throw DimensionError("pca: no points");
  const int dim = points[0].shape().empty() ? 1 : points[0].shape()[0];
  for (const Tensor& p : points)
    if (!p.same_shape(points[0])) throw DimensionError("pca: ragged point dimensions");
  if (points[0].shape().size() != 1)
    throw DimensionError("pca: points must be rank-1");
  if (dim < 2)
    throw DimensionError("pca: need at least two dimensions for two components");

  const double inv_n = 1.0 / static_cast<double>(points.size());
  Pca2 out;
  out.mean = Tensor::zeros({dim});
  for (const Tensor& p : points)
    for (int d = 0; d < dim; ++d) out.mean[d] += p[d];
  for (int d = 0; d < dim; ++d) out.mean[d] *= inv_n;

  Tensor cov = Tensor::zeros({dim, dim});
  for (const Tensor& p : points)
    for (int r = 0; r < dim; ++r) {
      const double dr = p[r] - out.mean[r];
      for (int c = 0; c < dim; ++c)
        cov[static_cast<std::int64_t>(r) * dim + c] += dr * (p[c] - out.mean[c]);
    }
  for (std::int64_t i = 0; i < cov.numel(); ++i) cov[i] *= inv_n;

  double trace = 0.0;
  for (int d = 0; d < dim; ++d) trace += cov[static_cast<std::int64_t>(d) * dim + d];
  if (trace <= 1e-18)
    throw DegeneracyError("pca: latents are constant, no principal directions exist");

  SymmetricEigen eig = jacobi_eigen(cov);
  out.components = Tensor::zeros({2, dim});
  for (int r = 0; r < 2; ++r) {
    int peak = 0;
    for (int d = 1; d < dim; ++d)
      if (std::abs(eig.vectors[static_cast<std::int64_t>(r) * dim + d]) >
          std::abs(eig.vectors[static_cast<std::int64_t>(r) * dim + peak]))
        peak = d;
    const double flip = eig.vectors[static_cast<std::int64_t>(r) * dim + peak] < 0.0 ? -1.0 : 1.0;
    for (int d = 0; d < dim; ++d)
      out.components[static_cast<std::int64_t>(r) * dim + d] =
          flip * eig.vectors[static_cast<std::int64_t>(r) * dim + d];
    out.explained_ratio.push_back(std::max(0.0, eig.values[static_cast<std::size_t>(r)]) / trace);
  }
  return out;
}

Tensor pca_project(const Pca2& pca, const Tensor& point) {
  if (!point.same_shape(pca.mean)) throw DimensionError("pca: point dimension mismatch");
  const int dim = pca.mean.shape()[0];
  Tensor out = Tensor::zeros({2});
  for (int r = 0; r < 2; ++r)
    for (int d = 0; d < dim; ++d)
      out[r] += pca.components[static_cast<std::int64_t>(r) * dim + d] * (point[d] - pca.mean[d]);
  return out;
}

Tensor pca_reconstruct(const Pca2& pca, const Tensor& projected) {
  if (projected.numel() != 2) throw DimensionError("pca: projection must have two entries");
  const int dim = pca.mean.shape()[0];
  Tensor out = pca.mean;
  for (int r = 0; r < 2; ++r)
    for (int d = 0; d < dim; ++d)
      out[d] += projected[r] * pca.components[static_cast<std::int64_t>(r) * dim + d];
  return out;
}

}  // namespace lmos
