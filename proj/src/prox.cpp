#include "hsrc/prox.hpp"

#include "hsrc/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace hsrc {

double prox_data_root(double pv, double p_norm2, double mu) {
  // Roots of mu t^2 - mu pv t - |p|^2: (pv +- sqrt(pv^2 + 4 |p|^2 / mu)) / 2.
  const double disc = std::sqrt(pv * pv + 4.0 * p_norm2 / mu);
  if (pv >= 0.0) return 0.5 * (pv + disc);
  // Product of the roots is -|p|^2 / mu.
  return 2.0 * p_norm2 / (mu * (disc - pv));
}

void prox_data_inplace(Eigen::Ref<Eigen::VectorXd> v, const Eigen::Ref<const Eigen::VectorXd>& p,
                       double mu) {
  const double t = prox_data_root(p.dot(v), p.squaredNorm(), mu);
  v += p / (mu * t);
}

Eigen::VectorXd prox_data(const Eigen::VectorXd& v, const Eigen::VectorXd& p, double mu) {
  if (v.size() != p.size()) throw InvalidArgument("prox_data: size mismatch");
  if (!(mu > 0.0)) throw InvalidArgument("prox_data: mu must be positive");
  if (!(p.squaredNorm() > 0.0)) throw InvalidArgument("prox_data: p must be nonzero");
  Eigen::VectorXd out = v;
  prox_data_inplace(out, p, mu);
  return out;
}

void project_simplex_inplace(Eigen::Ref<Eigen::VectorXd> v, std::vector<double>& scratch) {
  const Eigen::Index k = v.size();
  scratch.assign(v.data(), v.data() + k);
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumsum += scratch[static_cast<std::size_t>(j)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (scratch[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  for (Eigen::Index j = 0; j < k; ++j) v[j] = std::max(v[j] - theta, 0.0);
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  if (v.size() < 1) throw InvalidArgument("project_simplex: empty vector");
  if (!v.allFinite()) throw InvalidArgument("project_simplex: non-finite input");
  Eigen::VectorXd out = v;
  std::vector<double> scratch;
  project_simplex_inplace(out, scratch);
  return out;
}

Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& a, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("group_soft_threshold: negative threshold");
  const double norm = a.norm();
  if (norm <= threshold) return Eigen::VectorXd::Zero(a.size());
  return a * (1.0 - threshold / norm);
}

}  // namespace hsrc
