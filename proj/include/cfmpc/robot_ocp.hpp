#pragma once

#include "cfmpc/contact.hpp"
#include "cfmpc/costs.hpp"
#include "cfmpc/ddp.hpp"
#include "cfmpc/rigid_body.hpp"

#include <vector>

namespace cfmpc {

struct OcpSettings {
  int horizon = 5;          // T
  double dt = 0.025;        // s
  bool fd_derivatives = false;  // finite-difference dynamics partials
  double fd_step = 1e-6;
};

// The discretized contact-involved optimal control problem: semi-implicit
// Euler dynamics with the spring contacts frozen at their feedback
// parameters, running cost dt * l(x, u), terminal cost l_f(x).
class OcpProblem final : public ddp::Problem {
 public:
  OcpProblem(const RobotModel& model, OcpSettings settings, CostConfig costs,
             std::vector<ContactParams> contacts);

  int state_size() const override { return 2 * model_->dof(); }
  int control_size() const override { return model_->dof(); }
  int horizon() const override { return settings_.horizon; }
  const Eigen::VectorXd& initial_state() const override { return x0_; }
  const Eigen::VectorXd& control_lower() const override {
    return model_->limits().u_min;
  }
  const Eigen::VectorXd& control_upper() const override {
    return model_->limits().u_max;
  }

  void set_initial_state(const Eigen::VectorXd& x0);

  Eigen::VectorXd step(int t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override;
  double running_cost(int t, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u) const override;
  double terminal_cost(const Eigen::VectorXd& x) const override;
  void expand_stage(int t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    ddp::StageExpansion& out) const override;
  void expand_terminal(const Eigen::VectorXd& x, Eigen::VectorXd& lx,
                       Eigen::MatrixXd& lxx) const override;

  const RobotModel& model() const { return *model_; }
  const OcpSettings& settings() const { return settings_; }
  const CostConfig& cost_config() const { return costs_; }
  const std::vector<ContactParams>& contacts() const { return contacts_; }

  // Spring forces at a state, in the order of contacts().
  std::vector<Eigen::Vector3d> contact_forces(const Eigen::VectorXd& x) const;

 private:
  JointState split(const Eigen::VectorXd& x) const;

  const RobotModel* model_;
  OcpSettings settings_;
  CostConfig costs_;
  std::vector<ContactParams> contacts_;
  Eigen::VectorXd x0_;
};

// One semi-implicit Euler step of the contact-involved dynamics.
Eigen::VectorXd rollout_step(const OcpProblem& problem, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u);

}  // namespace cfmpc
