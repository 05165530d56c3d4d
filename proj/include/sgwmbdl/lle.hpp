#pragma once

#include <Eigen/Dense>
#include <numeric>

#include "sgwmbdl/common.hpp"

namespace sgwmbdl {

struct LleConfig {
  int k_neighbors = 10;
  int target_dim = 16;
  double reg_scale = 1e-3;
};

// Row-compressed neighbor weights: row i reconstructs point i from its K
// nearest neighbors, weights summing to 1.
struct SparseRowMatrix {
  std::size_t n = 0;
  std::vector<std::vector<int>> idx;
  std::vector<std::vector<double>> val;
};

struct LleModel {
  SparseRowMatrix weights;
  Mat embedding;  // n x target_dim, columns unit-norm
};

namespace lle_detail {

inline Eigen::MatrixXd to_eigen(const Mat& m) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(m.data.data(), m.rows, m.cols);
}

// Deterministic sign: make the first entry of significant magnitude positive.
inline void fix_column_signs(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (std::abs(m(r, c)) > 1e-12) {
        if (m(r, c) < 0) m.col(c) = -m.col(c);
        break;
      }
    }
  }
}

}  // namespace lle_detail

// K nearest neighbors by Euclidean distance, ties broken by lower index;
// a point is never its own neighbor.
inline std::vector<std::vector<int>> knn(const Mat& points, int K) {
  const int n = static_cast<int>(points.rows);
  if (K < 1 || K >= n) throw std::invalid_argument("knn: K must lie in [1, n)");
  const Eigen::MatrixXd P = lle_detail::to_eigen(points);
  const Eigen::VectorXd sq = P.rowwise().squaredNorm();
  const Eigen::MatrixXd gram = P * P.transpose();

  std::vector<std::vector<int>> nbrs(n, std::vector<int>(K));
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    const auto dist2 = [&](int j) { return std::max(0.0, sq[i] + sq[j] - 2.0 * gram(i, j)); };
    std::partial_sort(order.begin(), order.begin() + K, order.end(), [&](int a, int b) {
      const double da = dist2(a), db = dist2(b);
      return da < db || (da == db && a < b);
    });
    std::copy(order.begin(), order.begin() + K, nbrs[i].begin());
  }
  return nbrs;
}

// Affine reconstruction weights of x_i from its neighbor matrix (K x D):
// Gram matrix of the neighbor differences, regularized by eps*trace/K on the
// diagonal, solved against the all-ones vector and normalized to sum 1.
inline std::vector<double> local_weights(std::span<const double> x_i, const Mat& neighbors,
                                         double reg_scale) {
  const int K = static_cast<int>(neighbors.rows);
  const int D = static_cast<int>(neighbors.cols);
  if (K < 1 || static_cast<int>(x_i.size()) != D)
    throw std::invalid_argument("local_weights: shape mismatch");
  Eigen::MatrixXd G(K, D);
  for (int j = 0; j < K; ++j)
    for (int d = 0; d < D; ++d) G(j, d) = x_i[d] - neighbors(j, d);
  Eigen::MatrixXd Z = G * G.transpose();
  const double tr = Z.trace();
  Z.diagonal().array() += tr > 0.0 ? reg_scale * tr / K : reg_scale;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(K);
  const Eigen::VectorXd w = Z.partialPivLu().solve(ones);
  const double denom = w.sum();
  if (!w.allFinite() || (Z * w - ones).norm() > 1e-6 * std::sqrt(double(K)) ||
      std::abs(denom) < 1e-300)
    throw std::runtime_error("local_weights: singular local Gram matrix (K=" +
                             std::to_string(K) + ", trace=" + std::to_string(tr) + ")");
  std::vector<double> out(K);
  for (int j = 0; j < K; ++j) out[j] = w[j] / denom;
  return out;
}

// M = (I - W)^T (I - W), dense symmetric PSD with M * 1 = 0.
inline Mat embedding_matrix(const SparseRowMatrix& W) {
  const int n = static_cast<int>(W.n);
  Eigen::MatrixXd IW = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (std::size_t k = 0; k < W.idx[i].size(); ++k) IW(i, W.idx[i][k]) -= W.val[i][k];
  const Eigen::MatrixXd M = IW.transpose() * IW;
  Mat out(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = M(r, c);
  return out;
}

inline LleModel lle_reduce(const Mat& points, const LleConfig& cfg) {
  const int n = static_cast<int>(points.rows);
  const int D = static_cast<int>(points.cols);
  if (cfg.k_neighbors < 1 || cfg.k_neighbors >= n)
    throw std::invalid_argument("lle_reduce: k_neighbors must lie in [1, n)");
  if (cfg.target_dim < 1 || cfg.target_dim >= D)
    throw std::invalid_argument("lle_reduce: target_dim must lie in [1, input dim)");
  if (!(cfg.reg_scale >= 0.0)) throw std::invalid_argument("lle_reduce: reg_scale must be >= 0");

  LleModel model;
  model.weights.n = points.rows;
  model.weights.idx = knn(points, cfg.k_neighbors);
  model.weights.val.resize(n);
  Mat nbr(cfg.k_neighbors, D);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cfg.k_neighbors; ++j)
      for (int d = 0; d < D; ++d) nbr(j, d) = points(model.weights.idx[i][j], d);
    model.weights.val[i] = local_weights(points.row(i), nbr, cfg.reg_scale);
  }

  const Mat M = embedding_matrix(model.weights);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lle_detail::to_eigen(M));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("lle_reduce: eigen-solver failed to converge");

  // Eigenvalues ascend; drop the bottom (constant) eigenvector.
  Eigen::MatrixXd Y = solver.eigenvectors().middleCols(1, cfg.target_dim);
  lle_detail::fix_column_signs(Y);
  model.embedding = Mat(n, cfg.target_dim);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < cfg.target_dim; ++c) model.embedding(r, c) = Y(r, c);
  return model;
}

}  // namespace sgwmbdl
