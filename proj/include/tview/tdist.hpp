#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "tview/camera.hpp"
#include "tview/errors.hpp"
#include "tview/mathutil.hpp"
#include "tview/rng.hpp"

namespace tview {

// Multivariate t-distribution with location mu, SPD scale matrix sigma and
// nu degrees of freedom. sigma is the *scale* matrix, not the covariance;
// the covariance is (nu/(nu-2)) * sigma for nu > 2 (see covariance()).
template <int D>
struct MvtDist {
  using VecD = Eigen::Matrix<double, D, 1>;
  using MatD = Eigen::Matrix<double, D, D>;

  VecD mu = VecD::Zero();
  MatD sigma = MatD::Identity();
  double nu = 5.0;

  void validate() const {
    if ((sigma - sigma.transpose()).norm() >= 1e-12) {
      throw NotPositiveDefinite("sigma is not symmetric");
    }
    if (Eigen::LLT<MatD>(sigma).info() != Eigen::Success) {
      throw NotPositiveDefinite("sigma fails Cholesky factorization");
    }
    if (!(nu > 0.0)) {
      throw Error("nu must be positive");
    }
  }

  MatD covariance() const {
    if (std::isinf(nu)) return sigma;
    if (!(nu > 2.0)) throw Error("covariance undefined for nu <= 2");
    return (nu / (nu - 2.0)) * sigma;
  }

  double mahalanobis_sq(const VecD& x) const {
    Eigen::LLT<MatD> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("sigma fails Cholesky factorization");
    }
    const VecD r = x - mu;
    return r.dot(llt.solve(r));
  }

  // Unnormalized negative log density: terms independent of (mu, sigma) are
  // dropped, leaving log|sigma|/2 + ((nu+D)/2) log(1 + m^2/nu). The "1 +" in
  // the tail term matters: without it the loss is unbounded below.
  double nll(const VecD& x) const {
    Eigen::LLT<MatD> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("sigma fails Cholesky factorization");
    }
    double log_det = 0.0;
    for (int i = 0; i < D; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    const VecD r = x - mu;
    const double m2 = r.dot(llt.solve(r));
    if (std::isinf(nu)) {
      return 0.5 * log_det + 0.5 * m2;  // Gaussian limit
    }
    return 0.5 * log_det + 0.5 * (nu + D) * std::log1p(m2 / nu);
  }

  // One draw: x = mu + L z sqrt(nu/g), Sigma = L L^T, z iid standard normal,
  // g ~ chi^2_nu. Consumes D normals then (for finite nu) one chi^2 draw from
  // rng, so a fixed seed and draw index determine the sample exactly.
  VecD sample(Rng& rng) const {
    Eigen::LLT<MatD> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("sigma fails Cholesky factorization");
    }
    VecD z;
    for (int i = 0; i < D; ++i) z(i) = rng.normal();
    double scale = 1.0;
    if (!std::isinf(nu)) {
      scale = std::sqrt(nu / rng.chi2(nu));
    }
    return mu + llt.matrixL() * z * scale;
  }

  // Mahalanobis-squared threshold r2 with P(m^2 <= r2) = level, via
  // m^2 / D ~ F(D, nu).
  double confidence_radius2(double level) const {
    return D * f_quantile(level, D, nu);
  }
};

using MvtDist2 = MvtDist<2>;
using MvtDist3 = MvtDist<3>;

// Affine image of a multivariate t: stays multivariate t with mean A mu + b,
// scale A Sigma A^T and the same nu.
template <int M, int D>
MvtDist<M> affine_pushforward(const MvtDist<D>& dist,
                              const Eigen::Matrix<double, M, D>& A,
                              const Eigen::Matrix<double, M, 1>& b) {
  MvtDist<M> out;
  out.mu = A * dist.mu + b;
  out.sigma = A * dist.sigma * A.transpose();
  out.nu = dist.nu;
  if (Eigen::LLT<Eigen::Matrix<double, M, M>>(out.sigma).info() !=
      Eigen::Success) {
    throw RankDeficientMap();
  }
  return out;
}

// Push a 3D keypoint distribution onto a camera's image plane through the
// para-perspective map anchored at the distribution's own mean.
inline MvtDist2 project_to_camera(const MvtDist3& dist, const Camera& cam) {
  const ParaPerspectiveMap map = para_perspective_at(cam, dist.mu);
  return affine_pushforward<2, 3>(dist, map.A, map.b);
}

}  // namespace tview
