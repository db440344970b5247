#pragma once

#include "cfmpc/rigid_body.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace cfmpc {

// Feedback produced by the contact oracle (in place of the real estimator):
// one estimated contact position/force pair per contacted link.
struct ContactFeedback {
  Eigen::Vector3d position;  // world, m
  Eigen::Vector3d force;     // world, N
  int link = 1;              // 1-based
  double timestamp = 0.0;    // s
};

// Environment parameters of one active contact, rebuilt from feedback:
// a rank-1 world-frame stiffness, the environment rest location, and the
// body-fixed attachment advanced with forward kinematics.
struct ContactParams {
  Eigen::Matrix3d stiffness;       // K_env, world, N/m
  Eigen::Vector3d rest_position;   // r_env, world, m
  BodyPoint attachment;            // contact point, link frame
  int link = 1;                    // 1-based, equals attachment.link
  double stiffness_scalar = 0.0;   // k_env, N/m
  Eigen::Matrix3d frame;           // contact frame, z along feedback force
};

// Feedback forces below this magnitude cannot seed a usable contact frame.
inline constexpr double kMinContactForce = 0.5;  // N

struct DegenerateContactFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Proper rotation whose third column is force/|force|; the remaining axes
// are completed deterministically from the world axis least parallel to it.
Eigen::Matrix3d build_contact_frame(const Eigen::Vector3d& force);

ContactParams compute_theta(const ContactFeedback& feedback,
                            const RobotModel& model, const Eigen::VectorXd& q,
                            double k_env);

Eigen::Vector3d spring_force(const ContactParams& params, const RobotModel& model,
                             const Eigen::VectorXd& q);
Eigen::Vector3d spring_force(const ContactParams& params, const RobotModel& model,
                             const FrameSet& frames);

// d lambda / d q = -K_env J(q, r_c); partials w.r.t. velocity and control
// are identically zero.
Eigen::MatrixXd spring_force_jacobian(const ContactParams& params,
                                      const RobotModel& model,
                                      const Eigen::VectorXd& q);

Eigen::VectorXd external_torque(const std::vector<ContactParams>& contacts,
                                const RobotModel& model,
                                const Eigen::VectorXd& q);

// Evaluate the spring at q and package it for the dynamics derivatives.
PointSpring to_point_spring(const ContactParams& params, const RobotModel& model,
                            const FrameSet& frames);

}  // namespace cfmpc
