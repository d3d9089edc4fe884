#pragma once

// Proximal operators used by the hidden-field solver. All act on a single
// pixel's K-vector (or 2K-vector for the gradient group) and have
// allocation-free in-place forms for the solver's inner loop.

#include <Eigen/Dense>

#include <vector>

namespace hsrc {

// argmin_z  -ln(p^T z) + (mu/2) ||z - v||^2.
//
// Stationarity gives z = v + p / (mu t) with t = p^T z, hence t is the
// positive root of mu t^2 - mu (p^T v) t - ||p||^2 = 0.
Eigen::VectorXd prox_data(const Eigen::VectorXd& v, const Eigen::VectorXd& p, double mu);
void prox_data_inplace(Eigen::Ref<Eigen::VectorXd> v, const Eigen::Ref<const Eigen::VectorXd>& p,
                       double mu);

// Positive root t* of the quadratic above, computed without cancellation.
double prox_data_root(double pv, double p_norm2, double mu);

// Euclidean projection onto {z >= 0, 1^T z = 1}, sort-based.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);
void project_simplex_inplace(Eigen::Ref<Eigen::VectorXd> v, std::vector<double>& scratch);

// prox of threshold * ||.||_2: scales a by max(0, 1 - threshold / ||a||).
Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& a, double threshold);

}  // namespace hsrc
