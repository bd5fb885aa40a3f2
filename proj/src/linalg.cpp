#include "stdt/linalg.hpp"

#include "stdt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stdt {

Rng seeded_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

QrResult thin_qr_unchecked(const DenseMatrix& m) {
  const Eigen::Index n = m.rows(), p = m.cols();
  if (n < p)
    throw std::invalid_argument("thin_qr: need rows >= cols, got " +
                                std::to_string(n) + "x" + std::to_string(p));
  Eigen::HouseholderQR<DenseMatrix> qr(m);
  QrResult out;
  out.q = qr.householderQ() * DenseMatrix::Identity(n, p);
  out.r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (out.r(j, j) < 0.0) {
      out.r.row(j) *= -1.0;
      out.q.col(j) *= -1.0;
    }
  }
  return out;
}

QrResult thin_qr(const DenseMatrix& m) {
  QrResult out = thin_qr_unchecked(m);
  if (out.r.cols() == 0) return out;
  const DenseVector diag = out.r.diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  const double smallest = diag.minCoeff();
  if (!(smallest > 1e-12 * largest))
    throw RankDeficientError("matrix is not of full column rank (|R| diagonal range " +
                             std::to_string(smallest) + " .. " +
                             std::to_string(largest) + ")");
  return out;
}

SvdResult truncated_svd(const DenseMatrix& m, std::size_t r) {
  const auto lim = static_cast<std::size_t>(std::min(m.rows(), m.cols()));
  if (r < 1 || r > lim)
    throw std::invalid_argument("truncated_svd: rank " + std::to_string(r) +
                                " outside [1, " + std::to_string(lim) + "]");
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto rr = static_cast<Eigen::Index>(r);
  SvdResult out{svd.matrixU().leftCols(rr), svd.singularValues().head(rr),
                svd.matrixV().leftCols(rr)};
  for (Eigen::Index j = 0; j < rr; ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      const double a = std::abs(out.u(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (out.u(arg, j) < 0.0) {
      out.u.col(j) *= -1.0;
      out.v.col(j) *= -1.0;
    }
  }
  return out;
}

bool rank_admissible(const std::vector<std::size_t>& rank) {
  for (std::size_t k = 0; k < rank.size(); ++k) {
    std::size_t others = 1;
    for (std::size_t j = 0; j < rank.size(); ++j)
      if (j != k) others *= rank[j];
    if (rank[k] > others) return false;
  }
  return true;
}

TuckerFactors hosvd(const DenseTensor& t, const std::vector<std::size_t>& rank) {
  if (rank.size() != t.order())
    throw std::invalid_argument("hosvd: rank length differs from tensor order");
  for (std::size_t k = 0; k < rank.size(); ++k)
    if (rank[k] < 1 || rank[k] > t.dim(k))
      throw std::invalid_argument("hosvd: rank " + std::to_string(rank[k]) +
                                  " invalid for mode " + std::to_string(k) +
                                  " of size " + std::to_string(t.dim(k)));
  if (!rank_admissible(rank))
    throw std::invalid_argument("hosvd: inadmissible rank (some r_k exceeds the product of the others)");
  TuckerFactors out;
  out.core = t;
  for (std::size_t k = 0; k < rank.size(); ++k) {
    out.factors.push_back(truncated_svd(unfold(t, k), rank[k]).u);
    out.core = ttm_transposed(out.core, out.factors.back(), k);
  }
  return out;
}

double orthonormality_defect(const DenseMatrix& m) {
  const DenseMatrix g = m.transpose() * m;
  return (g - DenseMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double sin_theta(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("sin_theta: shape mismatch");
  if (a.cols() == 0) return 0.0;
  if (orthonormality_defect(a) > 1e-8 || orthonormality_defect(b) > 1e-8)
    throw std::invalid_argument("sin_theta: inputs must have orthonormal columns");
  const DenseMatrix cross = b.transpose() * a;
  Eigen::JacobiSVD<DenseMatrix> svd(cross);
  const double cos_min = std::min(1.0, svd.singularValues().minCoeff());
  const double sin_sq = 1.0 - cos_min * cos_min;
  // Cosines cannot resolve angles below ~1e-8; switch to the residual of a
  // after projecting onto span(b), whose largest singular value is the sine.
  if (sin_sq > 1e-4) return std::clamp(std::sqrt(sin_sq), 0.0, 1.0);
  const DenseMatrix residual = a - b * cross;
  Eigen::JacobiSVD<DenseMatrix> rsvd(residual);
  return std::clamp(rsvd.singularValues()(0), 0.0, 1.0);
}

DenseMatrix haar_orthonormal(std::size_t n, std::size_t r, Rng& rng) {
  if (r > n)
    throw std::invalid_argument("haar_orthonormal: cols " + std::to_string(r) +
                                " exceed rows " + std::to_string(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  return thin_qr_unchecked(g).q;
}

}  // namespace stdt
