#pragma once

#include "stdt/tensor.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace stdt {

using Rng = std::mt19937_64;

/// Independent generator for a named stream derived from a base seed, so that
/// separate random objects never share draws.
Rng seeded_stream(std::uint64_t seed, std::uint64_t stream);

struct QrResult {
  DenseMatrix q;  // n x p, orthonormal columns
  DenseMatrix r;  // p x p, upper triangular, nonnegative diagonal
};

struct SvdResult {
  DenseMatrix u;
  DenseVector s;  // nonincreasing
  DenseMatrix v;
};

/// Householder thin QR with the nonnegative-diagonal sign convention.
/// Throws RankDeficientError when the smallest |r_jj| is below
/// 1e-12 times the largest.
QrResult thin_qr(const DenseMatrix& m);

/// Same factorization without the rank check. The algorithm's re-orthonormalization
/// step tolerates (and propagates) a zero diagonal.
QrResult thin_qr_unchecked(const DenseMatrix& m);

/// Leading r singular triplets. Each left singular vector is flipped so its
/// largest-magnitude entry is positive (first index wins ties).
SvdResult truncated_svd(const DenseMatrix& m, std::size_t r);

struct TuckerFactors {
  DenseTensor core;
  std::vector<DenseMatrix> factors;
};

/// True when every r_k <= product of the other ranks.
bool rank_admissible(const std::vector<std::size_t>& rank);

/// Truncated higher-order SVD.
TuckerFactors hosvd(const DenseTensor& t, const std::vector<std::size_t>& rank);

/// Sine of the largest principal angle between the column spans of a and b.
double sin_theta(const DenseMatrix& a, const DenseMatrix& b);

/// n x r matrix with orthonormal columns, Haar distributed.
DenseMatrix haar_orthonormal(std::size_t n, std::size_t r, Rng& rng);

/// Largest |entry| of m^T m - I.
double orthonormality_defect(const DenseMatrix& m);

}  // namespace stdt
