#pragma once

#include "hsrc/core.hpp"

#include <Eigen/Dense>

#include <memory>

namespace hsrc {

// Solves (alpha I + beta D^T D) u = rhs for every class image of a K x n
// right-hand side, where D stacks the cyclic horizontal and vertical
// differences of vtv.hpp. D^T D is the cyclic 5-point Laplacian, which the
// 2-D DFT diagonalizes with eigenvalues
//   4 sin^2(pi u / height) + 4 sin^2(pi v / width),
// so each solve is two FFTs and a pointwise division.
//
// Holds FFTW plans and work buffers: create once per image size and reuse.
// Not safe for concurrent calls on the same instance.
class CyclicLaplacianSolver {
 public:
  explicit CyclicLaplacianSolver(ImageDims dims);
  ~CyclicLaplacianSolver();
  CyclicLaplacianSolver(CyclicLaplacianSolver&&) noexcept;
  CyclicLaplacianSolver& operator=(CyclicLaplacianSolver&&) noexcept;
  CyclicLaplacianSolver(const CyclicLaplacianSolver&) = delete;
  CyclicLaplacianSolver& operator=(const CyclicLaplacianSolver&) = delete;

  ImageDims dims() const;

  // Requires alpha > 0 and beta >= 0.
  void solve(const Eigen::MatrixXd& rhs, double alpha, double beta, Eigen::MatrixXd& out);
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs, double alpha, double beta);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot convenience wrapper around CyclicLaplacianSolver.
Eigen::MatrixXd solve_fft_system(const Eigen::MatrixXd& rhs, ImageDims dims, double alpha,
                                 double beta);

}  // namespace hsrc
