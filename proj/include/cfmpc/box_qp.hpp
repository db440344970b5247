#pragma once

#include <Eigen/Core>

#include <vector>

namespace cfmpc::ddp {

// minimize 0.5 x^T H x + g^T x  subject to  lo <= x <= hi,
// H symmetric positive-definite. Projected-Newton active-set iteration.
struct BoxQpResult {
  Eigen::VectorXd x;
  std::vector<bool> clamped;
  Eigen::MatrixXd free_hessian_inverse;  // zero rows/cols on clamped dims
  int iterations = 0;
  bool converged = false;
  bool factorization_failed = false;
};

struct BoxQpSettings {
  int max_iterations = 100;
  double tolerance = 1e-9;           // projected-gradient norm
  double step_decrease = 0.5;
  double min_step = 1e-12;
  double armijo = 0.1;
};

BoxQpResult solve_box_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         const Eigen::VectorXd& x0,
                         const BoxQpSettings& settings = {});

}  // namespace cfmpc::ddp
