#pragma once

#include <Eigen/Dense>

#include "drl/errors.hpp"
#include "drl/tensor.hpp"

namespace drl::linalg {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using ConstMap = Eigen::Map<const RowMat>;

inline ConstMap as_eigen(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

inline Map as_eigen(Tensor& t) {
  return Map(t.data().data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

inline Tensor from_eigen(const RowMat& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  as_eigen(t) = m;
  return t;
}

/// c += a * b
inline void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& c) {
  as_eigen(c).noalias() += as_eigen(a) * as_eigen(b);
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  as_eigen(c).noalias() = as_eigen(a) * as_eigen(b);
  return c;
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
inline Tensor cholesky_lower(const Tensor& a) {
  Eigen::LLT<RowMat> llt(as_eigen(a));
  if (llt.info() != Eigen::Success) {
    throw NumericError("Cholesky factorization failed; matrix is not positive definite");
  }
  return from_eigen(llt.matrixL());
}

struct SymEig {
  std::vector<double> eigenvalues;  // ascending
  Tensor eigenvectors;              // columns
};

inline SymEig sym_eig(const Tensor& a) {
  Eigen::SelfAdjointEigenSolver<RowMat> es(as_eigen(a));
  if (es.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition failed");
  }
  SymEig out;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  out.eigenvectors = from_eigen(es.eigenvectors());
  return out;
}

/// Solves the SPD-ish system (A) x = b via robust LDLT; throws on failure.
inline std::vector<double> solve_ldlt(const Tensor& a, const std::vector<double>& b) {
  Eigen::LDLT<RowMat> ldlt(as_eigen(a));
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("LDLT factorization failed");
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::VectorXd x = ldlt.solve(rhs);
  if (!x.allFinite()) {
    throw NumericError("linear solve produced non-finite solution");
  }
  return std::vector<double>(x.data(), x.data() + x.size());
}

}  // namespace drl::linalg
