#pragma once

// Cyclic first differences of a K-class field and the vector total
// variation built on them.

#include "hsrc/core.hpp"

#include <Eigen/Dense>

namespace hsrc {

// Horizontal and vertical first differences of every class image, both K x n.
// horizontal(k, i) = z(k, right(i)) - z(k, i), vertical(k, i) = z(k, below(i)),
// wrapping at the last column and row.
struct GradientField {
  Eigen::MatrixXd horizontal;
  Eigen::MatrixXd vertical;
};

GradientField gradient(const Eigen::MatrixXd& z, ImageDims dims);
void gradient_into(const Eigen::MatrixXd& z, ImageDims dims, GradientField& out);

// Adjoint of gradient(): returns D^T g, K x n.
Eigen::MatrixXd gradient_adjoint(const GradientField& g, ImageDims dims);
void gradient_adjoint_add(const GradientField& g, ImageDims dims, Eigen::MatrixXd& out);

// sum_i sqrt(sum_k horizontal(k,i)^2 + vertical(k,i)^2).
double vtv_norm(const GradientField& g);

// Per-pixel group soft threshold of the joint 2K-vector of each pixel.
GradientField prox_vtv(const GradientField& g, double threshold);
void prox_vtv_inplace(GradientField& g, double threshold, int threads = 1);

}  // namespace hsrc
