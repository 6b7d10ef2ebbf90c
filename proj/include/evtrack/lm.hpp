#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace evtrack {

struct LmOptions {
  int max_iterations = 50;
  double parameter_tolerance = 1e-6;
  double cost_tolerance = 1e-8;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  double max_damping = 1e12;
  double fd_step = 1e-6;
};

enum class LmStop { parameter_tolerance, cost_tolerance, max_iterations, no_progress, invalid_start };

template <int N>
struct LmSummary {
  Eigen::Matrix<double, N, 1> x;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  LmStop stop = LmStop::max_iterations;
};

// Forward-difference Jacobian of `f` at x. Falls back to a backward step when
// the forward point is invalid; a column whose both neighbours are invalid
// is left zero.
template <int N, typename Residual>
Eigen::MatrixXd forward_jacobian(Residual& f, const Eigen::Matrix<double, N, 1>& x, const std::vector<double>& r,
                                 double step) {
  const auto m = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, N);
  std::vector<double> rk(r.size());
  for (int k = 0; k < N; ++k) {
    Eigen::Matrix<double, N, 1> xk = x;
    xk[k] += step;
    double h = step;
    if (!f(xk, rk)) {
      xk[k] = x[k] - step;
      h = -step;
      if (!f(xk, rk)) continue;
    }
    for (Eigen::Index i = 0; i < m; ++i) J(i, k) = (rk[i] - r[i]) / h;
  }
  return J;
}

// Central-difference counterpart, used to check the forward scheme.
template <int N, typename Residual>
Eigen::MatrixXd central_jacobian(Residual& f, const Eigen::Matrix<double, N, 1>& x, std::size_t m, double step) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), N);
  std::vector<double> rp(m), rm(m);
  for (int k = 0; k < N; ++k) {
    Eigen::Matrix<double, N, 1> xp = x, xm = x;
    xp[k] += step;
    xm[k] -= step;
    if (!f(xp, rp) || !f(xm, rm)) continue;
    for (std::size_t i = 0; i < m; ++i) J(static_cast<Eigen::Index>(i), k) = (rp[i] - rm[i]) / (2.0 * step);
  }
  return J;
}

// Levenberg-Marquardt on sum_i r_i(x)^2 with Marquardt (diagonal) damping.
// `f(x, r)` fills the m residuals and returns false if x is infeasible.
// Always returns the best point seen.
template <int N, typename Residual>
LmSummary<N> levenberg_marquardt(Residual&& f, Eigen::Matrix<double, N, 1> x, std::size_t m, const LmOptions& opt) {
  using VecN = Eigen::Matrix<double, N, 1>;
  using MatN = Eigen::Matrix<double, N, N>;
  LmSummary<N> out;
  out.x = x;

  std::vector<double> r(m), r_new(m);
  if (!f(x, r)) {
    out.stop = LmStop::invalid_start;
    return out;
  }
  auto sq = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };
  double cost = sq(r);
  out.cost = cost;
  double lambda = opt.initial_damping;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::MatrixXd J = forward_jacobian<N>(f, x, r, opt.fd_step);
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(m));
    const MatN H = J.transpose() * J;
    const VecN g = J.transpose() * rv;
    const double diag_floor = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());

    bool accepted = false;
    while (!accepted) {
      MatN A = H;
      for (int k = 0; k < N; ++k) A(k, k) += lambda * std::max(H(k, k), diag_floor);
      const VecN step = A.ldlt().solve(-g);
      const VecN x_new = x + step;
      const bool ok = step.allFinite() && f(x_new, r_new);
      const double cost_new = ok ? sq(r_new) : std::numeric_limits<double>::infinity();
      if (ok && cost_new < cost) {
        const double rel = (cost - cost_new) / std::max(cost, std::numeric_limits<double>::min());
        x = x_new;
        r.swap(r_new);
        cost = cost_new;
        lambda = std::max(lambda / opt.damping_factor, 1e-15);
        accepted = true;
        out.x = x;
        out.cost = cost;
        if (step.norm() < opt.parameter_tolerance) {
          out.stop = LmStop::parameter_tolerance;
          return out;
        }
        if (rel < opt.cost_tolerance) {
          out.stop = LmStop::cost_tolerance;
          return out;
        }
      } else {
        lambda *= opt.damping_factor;
        if (lambda > opt.max_damping) {
          out.stop = LmStop::no_progress;
          return out;
        }
      }
    }
  }
  out.stop = LmStop::max_iterations;
  return out;
}

}  // namespace evtrack
