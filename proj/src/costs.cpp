#include "cfmpc/costs.hpp"

#include "cfmpc/so3.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmpc {

namespace {

CostEval zero_eval(int nq, int nu) {
  CostEval eval;
  eval.dx = Eigen::VectorXd::Zero(2 * nq);
  eval.du = Eigen::VectorXd::Zero(nu);
  eval.dxx = Eigen::MatrixXd::Zero(2 * nq, 2 * nq);
  eval.duu = Eigen::MatrixXd::Zero(nu, nu);
  return eval;
}

double barrier_limit(const CostConfig& config, int link) {
  if (config.lambda_max.size() == 0) {
    throw std::invalid_argument("force_barrier_cost: lambda_max not configured");
  }
  if (link < 1 || link > config.lambda_max.size()) {
    throw std::invalid_argument("force_barrier_cost: link outside lambda_max");
  }
  const double limit = config.lambda_max[link - 1];
  if (!(limit > 0.0)) {
    throw std::invalid_argument("force_barrier_cost: lambda_max must be > 0");
  }
  return limit;
}

}  // namespace

CostEval motion_cost(const CostConfig& config, const RobotModel& model,
                     const JointState& state) {
  const int n = model.dof();
  CostEval eval = zero_eval(n, n);

  eval.value += config.c_v * state.v.squaredNorm();
  eval.dx.tail(n) = 2.0 * config.c_v * state.v;
  eval.dxx.bottomRightCorner(n, n).diagonal().setConstant(2.0 * config.c_v);

  if (config.c_p > 0.0 || config.c_r > 0.0) {
    const FrameSet frames = compute_frames(model, state.q);
    const FramePlacement ee = ee_placement(model, frames);

    if (config.c_p > 0.0) {
      const Eigen::Vector3d err = ee.position - config.p_des;
      const Eigen::MatrixXd jp =
          point_jacobian(model, frames, model.ee_point());
      eval.value += config.c_p * err.squaredNorm();
      eval.dx.head(n).noalias() += 2.0 * config.c_p * jp.transpose() * err;
      eval.dxx.topLeftCorner(n, n).noalias() +=
          2.0 * config.c_p * jp.transpose() * jp;
    }

    if (config.c_r > 0.0) {
      // residual log(R_ee^T R_des); its q-derivative chains the inverse
      // left Jacobian through the body-frame angular velocity
      const Eigen::Vector3d err = so3_log(ee.rotation.transpose() * config.R_des);
      const Eigen::MatrixXd jw = angular_jacobian(model, frames, model.dof());
      const Eigen::MatrixXd jerr = -so3_left_jacobian_inverse(err) *
                                   ee.rotation.transpose() * jw;
      eval.value += config.c_r * err.squaredNorm();
      eval.dx.head(n).noalias() += 2.0 * config.c_r * jerr.transpose() * err;
      eval.dxx.topLeftCorner(n, n).noalias() +=
          2.0 * config.c_r * jerr.transpose() * jerr;
    }
  }
  return eval;
}

CostEval control_cost(const CostConfig& config, const Eigen::VectorXd& u) {
  const int nu = static_cast<int>(u.size());
  CostEval eval;
  eval.dx = Eigen::VectorXd::Zero(0);
  eval.dxx = Eigen::MatrixXd::Zero(0, 0);
  Eigen::VectorXd err = u;
  if (config.u_ref.size() == nu) {
    err -= config.u_ref;
  }
  eval.value = config.c_u * err.squaredNorm();
  eval.du = 2.0 * config.c_u * err;
  eval.duu = 2.0 * config.c_u * Eigen::MatrixXd::Identity(nu, nu);
  return eval;
}

ForceCostEval force_regulation_cost(const CostConfig& config,
                                    const Eigen::Vector3d& lambda, int link) {
  ForceCostEval eval;
  if (config.regulation_links.count(link) == 0) return eval;
  const Eigen::Vector3d err = config.A_d * (lambda - config.lambda_des);
  eval.value = config.c_lambda * err.squaredNorm();
  eval.dl = 2.0 * config.c_lambda * config.A_d.transpose() * err;
  eval.dll = 2.0 * config.c_lambda * config.A_d.transpose() * config.A_d;
  return eval;
}

ForceCostEval force_barrier_cost(const CostConfig& config,
                                 const Eigen::Vector3d& lambda, int link) {
  ForceCostEval eval;
  if (config.barrier_links.count(link) == 0) return eval;
  const double limit = barrier_limit(config, link);
  const double norm = lambda.norm();
  if (norm < config.barrier_scale * limit) return eval;

  // residual in |lambda|; the anchor is the limit itself, or the activation
  // edge for the C1-smoothed variant
  const double anchor = config.barrier_smooth ? config.barrier_scale * limit
                                              : limit;
  const double residual = norm - anchor;
  if (config.barrier_smooth && residual <= 0.0) return eval;
  const Eigen::Vector3d dir = lambda / std::max(norm, 1e-12);
  eval.value = config.c_lambda * residual * residual;
  eval.dl = 2.0 * config.c_lambda * residual * dir;
  eval.dll = 2.0 * config.c_lambda * dir * dir.transpose();
  return eval;
}

CostEval state_limit_cost(const CostConfig& config, const RobotModel& model,
                          const JointState& state) {
  const int n = model.dof();
  CostEval eval = zero_eval(n, n);
  if (config.state_limit_weight <= 0.0) return eval;
  const double w = config.state_limit_weight;
  const double margin = config.state_limit_margin;
  const auto& lim = model.limits();
  for (int i = 0; i < n; ++i) {
    const double over_q = state.q[i] - (lim.q_max[i] - margin);
    if (over_q > 0.0) {
      eval.value += w * over_q * over_q;
      eval.dx[i] += 2.0 * w * over_q;
      eval.dxx(i, i) += 2.0 * w;
    }
    const double under_q = (lim.q_min[i] + margin) - state.q[i];
    if (under_q > 0.0) {
      eval.value += w * under_q * under_q;
      eval.dx[i] -= 2.0 * w * under_q;
      eval.dxx(i, i) += 2.0 * w;
    }
    const double over_v = std::abs(state.v[i]) - (lim.v_max[i] - margin);
    if (over_v > 0.0) {
      const double sign = state.v[i] >= 0.0 ? 1.0 : -1.0;
      eval.value += w * over_v * over_v;
      eval.dx[n + i] += 2.0 * w * over_v * sign;
      eval.dxx(n + i, n + i) += 2.0 * w;
    }
  }
  return eval;
}

namespace {

// Shared composition of motion, state-limit, and contact terms; the control
// part is added only for the running cost.
CostEval state_cost_terms(const CostConfig& config, const RobotModel& model,
                          const JointState& state,
                          const std::vector<ContactParams>& contacts) {
  const int n = model.dof();
  CostEval eval = motion_cost(config, model, state);
  const CostEval limit = state_limit_cost(config, model, state);
  eval.value += limit.value;
  eval.dx += limit.dx;
  eval.dxx += limit.dxx;

  if (!contacts.empty()) {
    const FrameSet frames = compute_frames(model, state.q);
    for (const auto& c : contacts) {
      const Eigen::Vector3d lambda = spring_force(c, model, frames);
      ForceCostEval fc = force_barrier_cost(config, lambda, c.link);
      const ForceCostEval reg = force_regulation_cost(config, lambda, c.link);
      fc.value += reg.value;
      fc.dl += reg.dl;
      fc.dll += reg.dll;
      if (fc.value == 0.0 && fc.dl.isZero(0.0) && fc.dll.isZero(0.0)) continue;
      const Eigen::MatrixXd dlambda_dq =
          -c.stiffness * point_jacobian(model, frames, c.attachment);
      eval.value += fc.value;
      eval.dx.head(n).noalias() += dlambda_dq.transpose() * fc.dl;
      eval.dxx.topLeftCorner(n, n).noalias() +=
          dlambda_dq.transpose() * fc.dll * dlambda_dq;
    }
  }
  return eval;
}

}  // namespace

CostEval total_running_cost(const CostConfig& config, const RobotModel& model,
                            const JointState& state, const Eigen::VectorXd& u,
                            const std::vector<ContactParams>& contacts) {
  CostEval eval = state_cost_terms(config, model, state, contacts);
  const CostEval uc = control_cost(config, u);
  eval.value += uc.value;
  eval.du = uc.du;
  eval.duu = uc.duu;
  return eval;
}

CostEval total_terminal_cost(const CostConfig& config, const RobotModel& model,
                             const JointState& state,
                             const std::vector<ContactParams>& contacts) {
  CostEval eval = state_cost_terms(config, model, state, contacts);
  eval.du = Eigen::VectorXd::Zero(model.dof());
  eval.duu = Eigen::MatrixXd::Zero(model.dof(), model.dof());
  return eval;
}

}  // namespace cfmpc
