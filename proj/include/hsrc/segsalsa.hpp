#pragma once

// Marginal MAP estimation of the hidden field:
//
//   minimize   -sum_i ln(p_i^T z_i) + lambda_tv * VTV(z)
//   subject to z_i >= 0, 1^T z_i = 1 for every pixel i,
//
// solved by a variable-splitting augmented Lagrangian (ADMM) iteration with
// three auxiliary blocks: v1 = z for the data term, v2 = D z for the VTV
// term and v3 = z for the simplex constraint. The z-update is the linear
// system (2 I + D^T D) z = rhs, solved by FFT in O(K n log n).

#include "hsrc/core.hpp"

#include <Eigen/Dense>

#include <vector>

namespace hsrc {

enum class Boundary { cyclic };

struct VtvParams {
  double lambda_tv = 2.0;
  Boundary boundary = Boundary::cyclic;
  double mu = 1.0;
  int max_iter = 200;
  double tol_primal = 1e-4;
  int threads = 1;
  // Verify the prox_data stationarity identity at every pixel and iteration.
  bool check_stationarity = false;
};

void validate(const VtvParams& params);

struct SolveDiagnostics {
  int iterations = 0;
  // Relative primal residual and objective (at the simplex projection of the
  // current iterate), one entry per iteration.
  std::vector<double> primal_residual_history;
  std::vector<double> objective_history;
  bool converged = false;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  // Largest |mu (z - v) - p / (p^T z)| seen when check_stationarity is set.
  double max_stationarity_error = 0.0;
};

struct SegsalsaResult {
  HiddenField field;
  SolveDiagnostics diagnostics;
};

// Objective value, with each p_i^T z_i floored at kProbabilityFloor.
double segsalsa_objective(const ProbabilityField& probs, ImageDims dims, const Eigen::MatrixXd& z,
                          double lambda_tv);

// Uses z0 = probs.
SegsalsaResult segsalsa(const ProbabilityField& probs, ImageDims dims, const VtvParams& params);

// Starts from `initial` (K x n, projected onto the simplex first). The
// returned field is the lowest-objective simplex-feasible iterate, so its
// objective never exceeds the objective at the start.
SegsalsaResult segsalsa(const ProbabilityField& probs, ImageDims dims, const VtvParams& params,
                        const Eigen::MatrixXd& initial);

}  // namespace hsrc
