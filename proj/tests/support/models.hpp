#pragma once

#include "cfmpc/rigid_body.hpp"
#include "cfmpc/so3.hpp"

#include <cstdlib>
#include <random>
#include <string>

namespace cfmpc::testing {

inline JointLimits wide_limits(int n, double u_max = 200.0) {
  JointLimits lim;
  lim.q_min = Eigen::VectorXd::Constant(n, -3.0);
  lim.q_max = Eigen::VectorXd::Constant(n, 3.0);
  lim.v_max = Eigen::VectorXd::Constant(n, 10.0);
  lim.u_max = Eigen::VectorXd::Constant(n, u_max);
  lim.u_min = -lim.u_max;
  return lim;
}

// Point-mass pendulum about the world y-axis, hanging along -z at q = 0.
inline RobotModel pendulum(double mass = 1.5, double length = 0.8,
                           double gravity = 9.81) {
  JointSpec joint;
  joint.axis = Eigen::Vector3d::UnitY();
  LinkSpec link;
  link.mass = mass;
  link.com = Eigen::Vector3d(0, 0, -length);
  link.inertia = 1e-8 * Eigen::Matrix3d::Identity();
  return RobotModel({joint}, {link}, wide_limits(1), {0, 0, -gravity},
                    Eigen::Matrix3d::Identity(), {0, 0, -length});
}

// Two unit links rotating about y; tip at (0, 0, 2) when stretched at q = 0.
inline RobotModel planar2() {
  JointSpec j1, j2;
  j1.axis = Eigen::Vector3d::UnitY();
  j2.axis = Eigen::Vector3d::UnitY();
  j2.parent_translation = Eigen::Vector3d(0, 0, 1.0);
  LinkSpec l1, l2;
  l1.mass = 1.0;
  l1.com = Eigen::Vector3d(0, 0, 0.5);
  l1.inertia = 0.02 * Eigen::Matrix3d::Identity();
  l2 = l1;
  return RobotModel({j1, j2}, {l1, l2}, wide_limits(2), {0, 0, -9.81},
                    Eigen::Matrix3d::Identity(), {0, 0, 1.0});
}

// Three-joint sagittal-plane arm used by the fast tests.
inline RobotModel planar3() {
  std::vector<JointSpec> joints(3);
  std::vector<LinkSpec> links(3);
  const double lengths[3] = {0.4, 0.35, 0.3};
  const double masses[3] = {2.0, 1.5, 1.0};
  for (int i = 0; i < 3; ++i) {
    joints[i].axis = Eigen::Vector3d::UnitY();
    joints[i].parent_translation =
        i == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d(0, 0, lengths[i - 1]);
    links[i].mass = masses[i];
    links[i].com = Eigen::Vector3d(0, 0, 0.5 * lengths[i]);
    links[i].inertia =
        Eigen::Vector3d(0.02, 0.02, 0.005).asDiagonal().toDenseMatrix();
  }
  return RobotModel(joints, links, wide_limits(3), {0, 0, -9.81},
                    Eigen::Matrix3d::Identity(), {0, 0, 0.3});
}

// Random serial chain with sane masses and strictly PD inertias.
inline RobotModel random_chain(std::mt19937_64& rng, int dof) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 1.0);
  std::vector<JointSpec> joints(dof);
  std::vector<LinkSpec> links(dof);
  for (int i = 0; i < dof; ++i) {
    Eigen::Vector3d axis(uni(rng), uni(rng), uni(rng));
    while (axis.norm() < 1e-3) axis = {uni(rng), uni(rng), uni(rng)};
    joints[i].axis = axis.normalized();
    joints[i].parent_translation =
        0.3 * Eigen::Vector3d(uni(rng), uni(rng), uni(rng));
    if (i == 0) joints[i].parent_translation.setZero();
    joints[i].parent_rotation =
        so3_exp(0.5 * Eigen::Vector3d(uni(rng), uni(rng), uni(rng)));
    links[i].mass = 0.5 + pos(rng);
    links[i].com = 0.2 * Eigen::Vector3d(uni(rng), uni(rng), uni(rng));
    Eigen::Matrix3d a;
    a << uni(rng), uni(rng), uni(rng), uni(rng), uni(rng), uni(rng), uni(rng),
        uni(rng), uni(rng);
    links[i].inertia =
        0.02 * (a * a.transpose() + Eigen::Matrix3d::Identity());
  }
  return RobotModel(joints, links, wide_limits(dof), {0, 0, -9.81},
                    Eigen::Matrix3d::Identity(), {0, 0, 0.2});
}

inline std::string source_dir() {
  const char* env = std::getenv("CFMPC_SOURCE_DIR");
  return env != nullptr ? std::string(env) : std::string(".");
}

}  // namespace cfmpc::testing
