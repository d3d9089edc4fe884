#include "hsrc/vtv.hpp"

#include "hsrc/error.hpp"
#include "hsrc/parallel.hpp"

#include <cmath>

namespace hsrc {

namespace {

void check_shape(const Eigen::MatrixXd& m, ImageDims dims) {
  if (static_cast<std::size_t>(m.cols()) != dims.pixels()) {
    throw InvalidArgument("field has " + std::to_string(m.cols()) + " columns, image has " +
                          std::to_string(dims.pixels()) + " pixels");
  }
}

}  // namespace

void gradient_into(const Eigen::MatrixXd& z, ImageDims dims, GradientField& out) {
  check_shape(z, dims);
  out.horizontal.resize(z.rows(), z.cols());
  out.vertical.resize(z.rows(), z.cols());
  const int h = dims.height;
  const int w = dims.width;
  for (int r = 0; r < h; ++r) {
    const int below = (r + 1 == h) ? 0 : r + 1;
    for (int c = 0; c < w; ++c) {
      const int right = (c + 1 == w) ? 0 : c + 1;
      const auto i = static_cast<Eigen::Index>(dims.index(r, c));
      const auto ir = static_cast<Eigen::Index>(dims.index(r, right));
      const auto ib = static_cast<Eigen::Index>(dims.index(below, c));
      out.horizontal.col(i) = z.col(ir) - z.col(i);
      out.vertical.col(i) = z.col(ib) - z.col(i);
    }
  }
}

GradientField gradient(const Eigen::MatrixXd& z, ImageDims dims) {
  GradientField g;
  gradient_into(z, dims, g);
  return g;
}

void gradient_adjoint_add(const GradientField& g, ImageDims dims, Eigen::MatrixXd& out) {
  check_shape(g.horizontal, dims);
  check_shape(g.vertical, dims);
  const int h = dims.height;
  const int w = dims.width;
  for (int r = 0; r < h; ++r) {
    const int above = (r == 0) ? h - 1 : r - 1;
    for (int c = 0; c < w; ++c) {
      const int left = (c == 0) ? w - 1 : c - 1;
      const auto i = static_cast<Eigen::Index>(dims.index(r, c));
      const auto il = static_cast<Eigen::Index>(dims.index(r, left));
      const auto ia = static_cast<Eigen::Index>(dims.index(above, c));
      out.col(i) += g.horizontal.col(il) - g.horizontal.col(i) + g.vertical.col(ia) -
                    g.vertical.col(i);
    }
  }
}

Eigen::MatrixXd gradient_adjoint(const GradientField& g, ImageDims dims) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.horizontal.rows(), g.horizontal.cols());
  gradient_adjoint_add(g, dims, out);
  return out;
}

double vtv_norm(const GradientField& g) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < g.horizontal.cols(); ++i) {
    total += std::sqrt(g.horizontal.col(i).squaredNorm() + g.vertical.col(i).squaredNorm());
  }
  return total;
}

void prox_vtv_inplace(GradientField& g, double threshold, int threads) {
  if (threshold < 0.0) throw InvalidArgument("prox_vtv: negative threshold");
  if (threshold == 0.0) return;
  parallel_for(static_cast<std::size_t>(g.horizontal.cols()), threads,
               [&](std::size_t begin, std::size_t end) {
                 for (auto i = static_cast<Eigen::Index>(begin);
                      i < static_cast<Eigen::Index>(end); ++i) {
                   const double norm = std::sqrt(g.horizontal.col(i).squaredNorm() +
                                                 g.vertical.col(i).squaredNorm());
                   const double scale = norm <= threshold ? 0.0 : 1.0 - threshold / norm;
                   g.horizontal.col(i) *= scale;
                   g.vertical.col(i) *= scale;
                 }
               });
}

GradientField prox_vtv(const GradientField& g, double threshold) {
  GradientField out = g;
  prox_vtv_inplace(out, threshold);
  return out;
}

}  // namespace hsrc
