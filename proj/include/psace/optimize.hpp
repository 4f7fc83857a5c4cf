#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace psace {

struct LmOptions {
  std::size_t max_iter = 500;
  double step = 1e-7;        // relative finite-difference step
  double cost_tol = 1e-30;   // stop once 0.5 ||r||^2 falls below this
  double x_tol = 1e-15;
};

struct LmResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // 0.5 ||r||^2
  std::size_t iterations = 0;
};

/// Levenberg-Marquardt least squares on a residual function with a
/// central-difference Jacobian.
inline LmResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                    Eigen::VectorXd x, const LmOptions& options = {}) {
  Eigen::VectorXd r = residual(x);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  LmResult out{x, cost, 0};
  const Eigen::Index m = x.size();
  for (std::size_t it = 0; it < options.max_iter && cost > options.cost_tol; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd J(r.size(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double h = options.step * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index j = 0; j < m; ++j) A(j, j) += lambda * std::max(JtJ(j, j), 1e-12);
      const Eigen::VectorXd dx = A.ldlt().solve(-g);
      const Eigen::VectorXd trial = x + dx;
      const Eigen::VectorXd rt = residual(trial);
      const double ct = 0.5 * rt.squaredNorm();
      if (std::isfinite(ct) && ct < cost) {
        const double moved = dx.norm();
        x = trial;
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (moved < options.x_tol * (1.0 + x.norm())) it = options.max_iter;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  out.x = x;
  out.cost = cost;
  return out;
}

}  // namespace psace
