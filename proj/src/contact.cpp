#include "cfmpc/contact.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace cfmpc {

Eigen::Matrix3d build_contact_frame(const Eigen::Vector3d& force) {
  const double norm = force.norm();
  if (!(norm > kMinContactForce)) {
    throw DegenerateContactFrame("contact frame: force magnitude " +
                                 std::to_string(norm) + " N below threshold");
  }
  const Eigen::Vector3d z = force / norm;
  int aux = 0;
  z.cwiseAbs().minCoeff(&aux);
  const Eigen::Vector3d x = Eigen::Vector3d::Unit(aux).cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d frame;
  frame.col(0) = x;
  frame.col(1) = y;
  frame.col(2) = z;
  return frame;
}

ContactParams compute_theta(const ContactFeedback& feedback,
                            const RobotModel& model, const Eigen::VectorXd& q,
                            double k_env) {
  if (!(k_env > 0.0)) {
    throw std::invalid_argument("compute_theta: k_env must be positive");
  }
  ContactParams params;
  params.frame = build_contact_frame(feedback.force);
  params.stiffness_scalar = k_env;
  const Eigen::Vector3d z = params.frame.col(2);
  params.stiffness = k_env * z * z.transpose();
  // rest location on the stiffness range space: contact-frame z offset of
  // |force| / k_env behind the estimated contact point
  params.rest_position = feedback.position + z * (feedback.force.norm() / k_env);
  const FramePlacement place =
      forward_kinematics(model, q, BodyPoint{feedback.link, {0, 0, 0}});
  params.attachment.link = feedback.link;
  params.attachment.offset =
      place.rotation.transpose() * (feedback.position - place.position);
  params.link = feedback.link;
  return params;
}

Eigen::Vector3d spring_force(const ContactParams& params, const RobotModel& model,
                             const FrameSet& frames) {
  const Eigen::Vector3d r_c =
      forward_kinematics(model, frames, params.attachment).position;
  return params.stiffness * (params.rest_position - r_c);
}

Eigen::Vector3d spring_force(const ContactParams& params, const RobotModel& model,
                             const Eigen::VectorXd& q) {
  return spring_force(params, model, compute_frames(model, q));
}

Eigen::MatrixXd spring_force_jacobian(const ContactParams& params,
                                      const RobotModel& model,
                                      const Eigen::VectorXd& q) {
  return -params.stiffness * point_jacobian(model, q, params.attachment);
}

Eigen::VectorXd external_torque(const std::vector<ContactParams>& contacts,
                                const RobotModel& model,
                                const Eigen::VectorXd& q) {
  const FrameSet frames = compute_frames(model, q);
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(model.dof());
  for (const auto& c : contacts) {
    tau.noalias() += point_jacobian(model, frames, c.attachment).transpose() *
                     spring_force(c, model, frames);
  }
  return tau;
}

PointSpring to_point_spring(const ContactParams& params, const RobotModel& model,
                            const FrameSet& frames) {
  return {params.attachment, spring_force(params, model, frames),
          params.stiffness};
}

}  // namespace cfmpc
