#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace cfmpc {

// A point fixed on one link of the chain. Link indices are 1-based
// throughout the public interface (link 1 rotates with joint 1).
struct BodyPoint {
  int link = 1;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // link frame, m
};

struct JointSpec {
  Eigen::Matrix3d parent_rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d parent_translation = Eigen::Vector3d::Zero();  // m
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();               // unit
};

struct LinkSpec {
  double mass = 1.0;                                   // kg
  Eigen::Vector3d com = Eigen::Vector3d::Zero();       // link frame, m
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();  // about com, link frame
};

struct JointLimits {
  Eigen::VectorXd q_min, q_max;  // rad
  Eigen::VectorXd v_max;         // rad/s
  Eigen::VectorXd u_min, u_max;  // N*m
};

// Immutable description of an n-joint revolute serial chain. Construction
// validates masses, inertias, limits and axis norms; instances are safe to
// share across threads.
class RobotModel {
 public:
  RobotModel(std::vector<JointSpec> joints, std::vector<LinkSpec> links,
             JointLimits limits, Eigen::Vector3d gravity,
             Eigen::Matrix3d ee_rotation, Eigen::Vector3d ee_translation);

  static RobotModel load(const std::string& path);

  int dof() const { return static_cast<int>(joints_.size()); }
  const JointSpec& joint(int i) const { return joints_[i]; }  // 0-based
  const LinkSpec& link(int i) const { return links_[i]; }     // 0-based
  const JointLimits& limits() const { return limits_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }
  const Eigen::Matrix3d& ee_rotation() const { return ee_rotation_; }
  const Eigen::Vector3d& ee_translation() const { return ee_translation_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  // End-effector tip as a body point on the last link.
  BodyPoint ee_point() const { return {dof(), ee_translation_}; }

 private:
  std::vector<JointSpec> joints_;
  std::vector<LinkSpec> links_;
  JointLimits limits_;
  Eigen::Vector3d gravity_;
  Eigen::Matrix3d ee_rotation_;
  Eigen::Vector3d ee_translation_;
  std::string name_;
};

struct JointState {
  Eigen::VectorXd q;  // rad
  Eigen::VectorXd v;  // rad/s
};

// World-frame quantities of every link at a configuration q.
struct FrameSet {
  std::vector<Eigen::Matrix3d> rotation;  // link world rotation
  std::vector<Eigen::Vector3d> origin;    // joint origin, world
  std::vector<Eigen::Vector3d> axis;      // joint axis, world
};

FrameSet compute_frames(const RobotModel& model, const Eigen::VectorXd& q);

struct FramePlacement {
  Eigen::Vector3d position;
  Eigen::Matrix3d rotation;
};

FramePlacement forward_kinematics(const RobotModel& model,
                                  const Eigen::VectorXd& q,
                                  const BodyPoint& point);
FramePlacement forward_kinematics(const RobotModel& model, const FrameSet& frames,
                                  const BodyPoint& point);

FramePlacement ee_placement(const RobotModel& model, const FrameSet& frames);

// 3 x n positional Jacobian of a body point; columns distal to the point's
// link are zero.
Eigen::MatrixXd point_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                               const BodyPoint& point);
Eigen::MatrixXd point_jacobian(const RobotModel& model, const FrameSet& frames,
                               const BodyPoint& point);

// 3 x n angular Jacobian of a link (columns are proximal joint axes).
Eigen::MatrixXd angular_jacobian(const RobotModel& model, const FrameSet& frames,
                                 int link);

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q);

// Recursive Newton-Euler: joint torques realizing acceleration a at (q, v),
// gravity included, no external forces.
Eigen::VectorXd inverse_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& a);

// Combined Coriolis/centrifugal + gravity torque, C(q,v)v + g(q).
Eigen::VectorXd bias_forces(const RobotModel& model, const JointState& state);

// Pure gravity torque g(q).
Eigen::VectorXd gravity_torque(const RobotModel& model, const Eigen::VectorXd& q);

struct PointForce {
  BodyPoint point;
  Eigen::Vector3d force;  // world, N
};

// qdd = M(q)^-1 (u + sum J_i^T f_i - b(q, v))
Eigen::VectorXd forward_dynamics(const RobotModel& model, const JointState& state,
                                 const Eigen::VectorXd& u,
                                 const std::vector<PointForce>& contacts);

// A contact force with the configuration dependence of a world-frame spring:
// d(force)/d(point position) = -stiffness.
struct PointSpring {
  BodyPoint point;
  Eigen::Vector3d force;                                // world, N
  Eigen::Matrix3d stiffness = Eigen::Matrix3d::Zero();  // world, N/m
};

struct DynamicsDerivatives {
  Eigen::MatrixXd dq;  // d qdd / d q, n x n
  Eigen::MatrixXd dv;  // d qdd / d v, n x n
  Eigen::MatrixXd du;  // d qdd / d u, n x n
};

// Analytic partials of forward_dynamics with the spring model folded in:
// dq includes the -J^T K J stiffness term; dv and du carry no contact terms.
DynamicsDerivatives forward_dynamics_derivatives(
    const RobotModel& model, const JointState& state, const Eigen::VectorXd& u,
    const std::vector<PointSpring>& contacts);

// Central finite-difference fallback; the test oracle for the analytic path.
DynamicsDerivatives forward_dynamics_derivatives_fd(
    const RobotModel& model, const JointState& state, const Eigen::VectorXd& u,
    const std::vector<PointSpring>& contacts, double step = 1e-6);

}  // namespace cfmpc
