#include "hsrc/fft_solver.hpp"

#include "hsrc/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

namespace hsrc {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct CyclicLaplacianSolver::Impl {
  ImageDims dims;
  int spectral_width = 0;  // width / 2 + 1 (r2c half spectrum)
  double* spatial = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> eigenvalues;  // height x spectral_width, row-major

  explicit Impl(ImageDims d) : dims(d), spectral_width(d.width / 2 + 1) {
    const std::size_t n = dims.pixels();
    const std::size_t ns = static_cast<std::size_t>(dims.height) * spectral_width;
    spatial = fftw_alloc_real(n);
    spectrum = fftw_alloc_complex(ns);
    if (spatial == nullptr || spectrum == nullptr) {
      release();
      throw Error("fftw allocation failed");
    }
    {
      std::lock_guard lock(planner_mutex());
      forward = fftw_plan_dft_r2c_2d(dims.height, dims.width, spatial, spectrum, FFTW_ESTIMATE);
      backward = fftw_plan_dft_c2r_2d(dims.height, dims.width, spectrum, spatial, FFTW_ESTIMATE);
    }
    if (forward == nullptr || backward == nullptr) {
      release();
      throw Error("fftw planning failed");
    }
    eigenvalues.resize(ns);
    for (int u = 0; u < dims.height; ++u) {
      const double su = std::sin(std::numbers::pi * u / dims.height);
      for (int v = 0; v < spectral_width; ++v) {
        const double sv = std::sin(std::numbers::pi * v / dims.width);
        eigenvalues[static_cast<std::size_t>(u) * spectral_width + v] =
            4.0 * su * su + 4.0 * sv * sv;
      }
    }
  }

  void release() {
    std::lock_guard lock(planner_mutex());
    if (forward != nullptr) fftw_destroy_plan(forward);
    if (backward != nullptr) fftw_destroy_plan(backward);
    if (spatial != nullptr) fftw_free(spatial);
    if (spectrum != nullptr) fftw_free(spectrum);
    forward = backward = nullptr;
    spatial = nullptr;
    spectrum = nullptr;
  }

  ~Impl() { release(); }
};

CyclicLaplacianSolver::CyclicLaplacianSolver(ImageDims dims) {
  if (dims.height < 1 || dims.width < 1) throw InvalidArgument("invalid image dimensions");
  impl_ = std::make_unique<Impl>(dims);
}

CyclicLaplacianSolver::~CyclicLaplacianSolver() = default;
CyclicLaplacianSolver::CyclicLaplacianSolver(CyclicLaplacianSolver&&) noexcept = default;
CyclicLaplacianSolver& CyclicLaplacianSolver::operator=(CyclicLaplacianSolver&&) noexcept =
    default;

ImageDims CyclicLaplacianSolver::dims() const { return impl_->dims; }

void CyclicLaplacianSolver::solve(const Eigen::MatrixXd& rhs, double alpha, double beta,
                                  Eigen::MatrixXd& out) {
  if (!(alpha > 0.0) || beta < 0.0) {
    throw InvalidArgument("solve_fft_system needs alpha > 0 and beta >= 0");
  }
  Impl& s = *impl_;
  const std::size_t n = s.dims.pixels();
  if (static_cast<std::size_t>(rhs.cols()) != n) {
    throw InvalidArgument("right-hand side does not match the solver's image size");
  }
  out.resize(rhs.rows(), rhs.cols());
  const double scale = 1.0 / static_cast<double>(n);
  const std::size_t ns = s.eigenvalues.size();
  for (Eigen::Index k = 0; k < rhs.rows(); ++k) {
    for (std::size_t i = 0; i < n; ++i) s.spatial[i] = rhs(k, static_cast<Eigen::Index>(i));
    fftw_execute(s.forward);
    for (std::size_t j = 0; j < ns; ++j) {
      const double denom = (alpha + beta * s.eigenvalues[j]) / scale;
      s.spectrum[j][0] /= denom;
      s.spectrum[j][1] /= denom;
    }
    fftw_execute(s.backward);
    for (std::size_t i = 0; i < n; ++i) out(k, static_cast<Eigen::Index>(i)) = s.spatial[i];
  }
}

Eigen::MatrixXd CyclicLaplacianSolver::solve(const Eigen::MatrixXd& rhs, double alpha,
                                             double beta) {
  Eigen::MatrixXd out;
  solve(rhs, alpha, beta, out);
  return out;
}

Eigen::MatrixXd solve_fft_system(const Eigen::MatrixXd& rhs, ImageDims dims, double alpha,
                                 double beta) {
  CyclicLaplacianSolver solver(dims);
  return solver.solve(rhs, alpha, beta);
}

}  // namespace hsrc
