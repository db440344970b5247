#include "cfmpc/box_qp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace cfmpc::ddp {

BoxQpResult solve_box_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         const Eigen::VectorXd& x0,
                         const BoxQpSettings& settings) {
  const int n = static_cast<int>(g.size());
  if (hessian.rows() != n || hessian.cols() != n || lo.size() != n ||
      hi.size() != n || x0.size() != n) {
    throw std::invalid_argument("solve_box_qp: dimension mismatch");
  }

  BoxQpResult result;
  result.clamped.assign(n, false);
  result.free_hessian_inverse = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd x = x0.cwiseMax(lo).cwiseMin(hi);

  const auto objective = [&](const Eigen::VectorXd& z) {
    return 0.5 * z.dot(hessian * z) + g.dot(z);
  };

  double value = objective(x);
  std::vector<int> free_idx;
  free_idx.reserve(n);

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::VectorXd grad = hessian * x + g;

    free_idx.clear();
    for (int i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= lo[i] && grad[i] > 0.0;
      const bool at_hi = x[i] >= hi[i] && grad[i] < 0.0;
      result.clamped[i] = at_lo || at_hi;
      if (!result.clamped[i]) free_idx.push_back(i);
    }

    double free_grad_norm = 0.0;
    for (int i : free_idx) free_grad_norm = std::max(free_grad_norm, std::abs(grad[i]));
    if (free_grad_norm < settings.tolerance) {
      result.converged = true;
      break;
    }
    if (free_idx.empty()) {
      result.converged = true;
      break;
    }

    const int nf = static_cast<int>(free_idx.size());
    Eigen::MatrixXd hff(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int a = 0; a < nf; ++a) {
      gf[a] = grad[free_idx[a]];
      for (int b = 0; b < nf; ++b) hff(a, b) = hessian(free_idx[a], free_idx[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(hff);
    if (llt.info() != Eigen::Success) {
      result.factorization_failed = true;
      return result;
    }
    const Eigen::VectorXd step_f = -llt.solve(gf);

    Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < nf; ++a) direction[free_idx[a]] = step_f[a];

    // backtracking with projection onto the box
    double alpha = 1.0;
    const double slope = grad.dot(direction);
    bool accepted = false;
    while (alpha >= settings.min_step) {
      const Eigen::VectorXd cand = (x + alpha * direction).cwiseMax(lo).cwiseMin(hi);
      const double cand_value = objective(cand);
      if (cand_value <= value + settings.armijo * alpha * slope ||
          cand_value < value) {
        x = cand;
        value = cand_value;
        accepted = true;
        break;
      }
      alpha *= settings.step_decrease;
    }
    if (!accepted) {
      result.converged = true;  // no further progress possible
      break;
    }
  }

  // expose the free-block inverse for the feedback gain computation
  free_idx.clear();
  const Eigen::VectorXd grad = hessian * x + g;
  for (int i = 0; i < n; ++i) {
    const bool at_lo = x[i] <= lo[i] && grad[i] > 0.0;
    const bool at_hi = x[i] >= hi[i] && grad[i] < 0.0;
    result.clamped[i] = at_lo || at_hi;
    if (!result.clamped[i]) free_idx.push_back(i);
  }
  if (!free_idx.empty()) {
    const int nf = static_cast<int>(free_idx.size());
    Eigen::MatrixXd hff(nf, nf);
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) hff(a, b) = hessian(free_idx[a], free_idx[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(hff);
    if (llt.info() != Eigen::Success) {
      result.factorization_failed = true;
      return result;
    }
    const Eigen::MatrixXd inv_f =
        llt.solve(Eigen::MatrixXd::Identity(nf, nf));
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) {
        result.free_hessian_inverse(free_idx[a], free_idx[b]) = inv_f(a, b);
      }
    }
  }
  result.x = x;
  return result;
}

}  // namespace cfmpc::ddp
