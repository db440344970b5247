#include "cfmpc/robot_ocp.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmpc {

OcpProblem::OcpProblem(const RobotModel& model, OcpSettings settings,
                       CostConfig costs, std::vector<ContactParams> contacts)
    : model_(&model),
      settings_(settings),
      costs_(std::move(costs)),
      contacts_(std::move(contacts)) {
  if (settings_.horizon < 1) {
    throw std::invalid_argument("OcpProblem: horizon must be >= 1");
  }
  if (!(settings_.dt > 0.0)) {
    throw std::invalid_argument("OcpProblem: dt must be positive");
  }
  for (const auto& c : contacts_) {
    if (c.link < 1 || c.link > model.dof()) {
      throw std::invalid_argument("OcpProblem: contact link out of range");
    }
  }
  x0_ = Eigen::VectorXd::Zero(2 * model.dof());
}

void OcpProblem::set_initial_state(const Eigen::VectorXd& x0) {
  if (x0.size() != state_size() || !x0.allFinite()) {
    throw std::invalid_argument("OcpProblem: bad initial state");
  }
  x0_ = x0;
}

JointState OcpProblem::split(const Eigen::VectorXd& x) const {
  const int n = model_->dof();
  return {x.head(n), x.tail(n)};
}

Eigen::VectorXd OcpProblem::step(int /*t*/, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u) const {
  const int n = model_->dof();
  const JointState state = split(x);
  const FrameSet frames = compute_frames(*model_, state.q);
  std::vector<PointForce> forces;
  forces.reserve(contacts_.size());
  for (const auto& c : contacts_) {
    forces.push_back({c.attachment, spring_force(c, *model_, frames)});
  }
  const Eigen::VectorXd qdd = forward_dynamics(*model_, state, u, forces);
  if (!qdd.allFinite()) {
    throw std::runtime_error("OcpProblem::step: non-finite dynamics");
  }
  Eigen::VectorXd next(2 * n);
  next.tail(n) = state.v + settings_.dt * qdd;
  next.head(n) = state.q + settings_.dt * next.tail(n);
  return next;
}

double OcpProblem::running_cost(int /*t*/, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) const {
  return settings_.dt *
         total_running_cost(costs_, *model_, split(x), u, contacts_).value;
}

double OcpProblem::terminal_cost(const Eigen::VectorXd& x) const {
  return total_terminal_cost(costs_, *model_, split(x), contacts_).value;
}

void OcpProblem::expand_stage(int /*t*/, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u,
                              ddp::StageExpansion& out) const {
  const int n = model_->dof();
  const double dt = settings_.dt;
  const JointState state = split(x);

  const FrameSet frames = compute_frames(*model_, state.q);
  std::vector<PointSpring> springs;
  springs.reserve(contacts_.size());
  for (const auto& c : contacts_) {
    springs.push_back(to_point_spring(c, *model_, frames));
  }
  const DynamicsDerivatives dyn =
      settings_.fd_derivatives
          ? forward_dynamics_derivatives_fd(*model_, state, u, springs,
                                            settings_.fd_step)
          : forward_dynamics_derivatives(*model_, state, u, springs);

  // semi-implicit Euler: v+ = v + dt a, q+ = q + dt v+
  out.fx.resize(2 * n, 2 * n);
  out.fx.topLeftCorner(n, n) =
      Eigen::MatrixXd::Identity(n, n) + dt * dt * dyn.dq;
  out.fx.topRightCorner(n, n) =
      dt * Eigen::MatrixXd::Identity(n, n) + dt * dt * dyn.dv;
  out.fx.bottomLeftCorner(n, n) = dt * dyn.dq;
  out.fx.bottomRightCorner(n, n) =
      Eigen::MatrixXd::Identity(n, n) + dt * dyn.dv;
  out.fu.resize(2 * n, n);
  out.fu.topRows(n) = dt * dt * dyn.du;
  out.fu.bottomRows(n) = dt * dyn.du;

  const CostEval cost = total_running_cost(costs_, *model_, state, u, contacts_);
  out.cost = dt * cost.value;
  out.lx = dt * cost.dx;
  out.lu = dt * cost.du;
  out.lxx = dt * cost.dxx;
  out.luu = dt * cost.duu;
}

void OcpProblem::expand_terminal(const Eigen::VectorXd& x, Eigen::VectorXd& lx,
                                 Eigen::MatrixXd& lxx) const {
  const CostEval cost = total_terminal_cost(costs_, *model_, split(x), contacts_);
  lx = cost.dx;
  lxx = cost.dxx;
}

std::vector<Eigen::Vector3d> OcpProblem::contact_forces(
    const Eigen::VectorXd& x) const {
  const JointState state = split(x);
  const FrameSet frames = compute_frames(*model_, state.q);
  std::vector<Eigen::Vector3d> forces;
  forces.reserve(contacts_.size());
  for (const auto& c : contacts_) {
    forces.push_back(spring_force(c, *model_, frames));
  }
  return forces;
}

Eigen::VectorXd rollout_step(const OcpProblem& problem, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) {
  return problem.step(0, x, u);
}

}  // namespace cfmpc
