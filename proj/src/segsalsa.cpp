#include "hsrc/segsalsa.hpp"

#include "hsrc/error.hpp"
#include "hsrc/fft_solver.hpp"
#include "hsrc/parallel.hpp"
#include "hsrc/prox.hpp"
#include "hsrc/vtv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hsrc {

void validate(const VtvParams& params) {
  if (!(params.lambda_tv >= 0.0)) throw InvalidArgument("lambda_tv must be nonnegative");
  if (!(params.mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (params.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(params.tol_primal > 0.0)) throw InvalidArgument("tol_primal must be positive");
  if (params.threads < 1) throw InvalidArgument("threads must be at least 1");
}

double segsalsa_objective(const ProbabilityField& probs, ImageDims dims, const Eigen::MatrixXd& z,
                          double lambda_tv) {
  const Eigen::MatrixXd& p = probs.matrix();
  if (p.rows() != z.rows() || p.cols() != z.cols()) {
    throw InvalidArgument("objective: field and probabilities differ in shape");
  }
  double data = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    data -= std::log(std::max(p.col(i).dot(z.col(i)), kProbabilityFloor));
  }
  if (lambda_tv == 0.0) return data;
  return data + lambda_tv * vtv_norm(gradient(z, dims));
}

namespace {

void project_columns(Eigen::MatrixXd& m, int threads) {
  parallel_for(static_cast<std::size_t>(m.cols()), threads,
               [&](std::size_t begin, std::size_t end) {
                 std::vector<double> scratch;
                 for (auto i = static_cast<Eigen::Index>(begin);
                      i < static_cast<Eigen::Index>(end); ++i) {
                   project_simplex_inplace(m.col(i), scratch);
                 }
               });
}

}  // namespace

SegsalsaResult segsalsa(const ProbabilityField& probs, ImageDims dims, const VtvParams& params) {
  return segsalsa(probs, dims, params, probs.matrix());
}

SegsalsaResult segsalsa(const ProbabilityField& probs, ImageDims dims, const VtvParams& params,
                        const Eigen::MatrixXd& initial) {
  validate(params);
  const Eigen::MatrixXd& p = probs.matrix();
  if (probs.pixels() != dims.pixels()) {
    throw InvalidArgument("probability field has " + std::to_string(probs.pixels()) +
                          " pixels, image has " + std::to_string(dims.pixels()));
  }
  if (initial.rows() != p.rows() || initial.cols() != p.cols()) {
    throw InvalidArgument("initial field shape differs from the probability field");
  }
  const int threads = params.threads;
  const double mu = params.mu;
  const double threshold = params.lambda_tv / mu;
  const auto n = static_cast<std::size_t>(p.cols());

  Eigen::MatrixXd z = initial;
  project_columns(z, threads);

  Eigen::MatrixXd v1 = z;
  Eigen::MatrixXd v3 = z;
  GradientField v2 = gradient(z, dims);
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  Eigen::MatrixXd d3 = d1;
  GradientField d2{d1, d1};

  CyclicLaplacianSolver solver(dims);
  Eigen::MatrixXd rhs(z.rows(), z.cols());
  GradientField dz;
  GradientField shifted;
  Eigen::MatrixXd feasible;

  SolveDiagnostics diag;
  diag.initial_objective = segsalsa_objective(probs, dims, z, params.lambda_tv);
  Eigen::MatrixXd best = z;
  double best_objective = diag.initial_objective;

  for (int it = 0; it < params.max_iter; ++it) {
    // z-update: (2 I + D^T D) z = (v1 + d1) + D^T (v2 + d2) + (v3 + d3).
    rhs = v1 + d1 + v3 + d3;
    shifted.horizontal = v2.horizontal + d2.horizontal;
    shifted.vertical = v2.vertical + d2.vertical;
    gradient_adjoint_add(shifted, dims, rhs);
    solver.solve(rhs, 2.0, 1.0, z);
    gradient_into(z, dims, dz);

    // Data block.
    v1 = z - d1;
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (auto i = static_cast<Eigen::Index>(begin); i < static_cast<Eigen::Index>(end); ++i) {
        prox_data_inplace(v1.col(i), p.col(i), mu);
      }
    });
    if (params.check_stationarity) {
      for (Eigen::Index i = 0; i < v1.cols(); ++i) {
        const Eigen::VectorXd arg = z.col(i) - d1.col(i);
        const Eigen::VectorXd residual =
            mu * (v1.col(i) - arg) - p.col(i) / p.col(i).dot(v1.col(i));
        diag.max_stationarity_error =
            std::max(diag.max_stationarity_error, residual.lpNorm<Eigen::Infinity>());
      }
    }

    // VTV block.
    v2.horizontal = dz.horizontal - d2.horizontal;
    v2.vertical = dz.vertical - d2.vertical;
    prox_vtv_inplace(v2, threshold, threads);

    // Simplex block.
    v3 = z - d3;
    project_columns(v3, threads);

    // Multipliers.
    const Eigen::MatrixXd r1 = z - v1;
    const Eigen::MatrixXd r2h = dz.horizontal - v2.horizontal;
    const Eigen::MatrixXd r2v = dz.vertical - v2.vertical;
    const Eigen::MatrixXd r3 = z - v3;
    d1 -= r1;
    d2.horizontal -= r2h;
    d2.vertical -= r2v;
    d3 -= r3;

    const double residual = std::sqrt(r1.squaredNorm() + r2h.squaredNorm() +
                                      r2v.squaredNorm() + r3.squaredNorm());
    const double scale = std::sqrt(v1.squaredNorm() + v2.horizontal.squaredNorm() +
                                   v2.vertical.squaredNorm() + v3.squaredNorm());
    const double relative = residual / std::max(scale, 1.0);

    feasible = z;
    project_columns(feasible, threads);
    const double objective = segsalsa_objective(probs, dims, feasible, params.lambda_tv);
    if (objective < best_objective) {
      best_objective = objective;
      best = feasible;
    }

    diag.primal_residual_history.push_back(relative);
    diag.objective_history.push_back(objective);
    diag.iterations = it + 1;
    if (relative <= params.tol_primal) {
      diag.converged = true;
      break;
    }
  }
  if (params.lambda_tv == 0.0) {
    // Separable problem: the vertex at each pixel's largest probability is exact.
    Eigen::MatrixXd vertex = Eigen::MatrixXd::Zero(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      Eigen::Index k = 0;
      p.col(i).maxCoeff(&k);
      vertex(k, i) = 1.0;
    }
    const double objective = segsalsa_objective(probs, dims, vertex, 0.0);
    if (objective <= best_objective) {
      best_objective = objective;
      best = std::move(vertex);
    }
  }
  diag.final_objective = best_objective;
  return SegsalsaResult{HiddenField(dims, std::move(best)), std::move(diag)};
}

}  // namespace hsrc
