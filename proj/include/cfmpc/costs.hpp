#pragma once

#include "cfmpc/contact.hpp"
#include "cfmpc/rigid_body.hpp"

#include <Eigen/Core>

#include <set>
#include <vector>

namespace cfmpc {

// Gains and targets of the running/terminal cost. Values are continuous-time
// cost rates; the OCP scales running terms by the time step.
struct CostConfig {
  double c_v = 0.0;       // joint velocity
  double c_p = 0.0;       // end-effector position
  double c_r = 0.0;       // end-effector orientation
  double c_u = 0.0;       // control deviation from u_ref
  double c_lambda = 0.0;  // contact force (regulation and barrier)

  Eigen::Vector3d p_des = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R_des = Eigen::Matrix3d::Identity();
  Eigen::Vector3d lambda_des = Eigen::Vector3d::Zero();
  Eigen::Matrix3d A_d = Eigen::Matrix3d::Identity();  // diagonal 0/1 selector

  Eigen::VectorXd lambda_max;     // per link, N
  double barrier_scale = 0.9;     // b in (0,1)
  bool barrier_smooth = false;    // C1 hinge variant instead of the case split

  std::set<int> barrier_links;     // gamma_set,1 (1-based)
  std::set<int> regulation_links;  // gamma_set,2 (1-based)

  Eigen::VectorXd u_ref;  // u_0

  double state_limit_weight = 0.0;  // w_x
  double state_limit_margin = 0.0;  // activates penalty inside the true limit
};

// Value with gradients and Gauss-Newton Hessian blocks over x = (q, v) and
// u; cross terms are identically zero for every cost here.
struct CostEval {
  double value = 0.0;
  Eigen::VectorXd dx;
  Eigen::VectorXd du;
  Eigen::MatrixXd dxx;
  Eigen::MatrixXd duu;
};

// Same, in the 3-dimensional force argument of a per-contact cost; the
// caller chains through d lambda / d q.
struct ForceCostEval {
  double value = 0.0;
  Eigen::Vector3d dl = Eigen::Vector3d::Zero();
  Eigen::Matrix3d dll = Eigen::Matrix3d::Zero();
};

CostEval motion_cost(const CostConfig& config, const RobotModel& model,
                     const JointState& state);

CostEval control_cost(const CostConfig& config, const Eigen::VectorXd& u);

ForceCostEval force_regulation_cost(const CostConfig& config,
                                    const Eigen::Vector3d& lambda, int link);

ForceCostEval force_barrier_cost(const CostConfig& config,
                                 const Eigen::Vector3d& lambda, int link);

CostEval state_limit_cost(const CostConfig& config, const RobotModel& model,
                          const JointState& state);

CostEval total_running_cost(const CostConfig& config, const RobotModel& model,
                            const JointState& state, const Eigen::VectorXd& u,
                            const std::vector<ContactParams>& contacts);

CostEval total_terminal_cost(const CostConfig& config, const RobotModel& model,
                             const JointState& state,
                             const std::vector<ContactParams>& contacts);

}  // namespace cfmpc
