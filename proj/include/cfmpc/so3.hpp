#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace cfmpc {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

inline Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  if (theta < 1e-10) {
    return Eigen::Matrix3d::Identity() + skew(phi);
  }
  const Eigen::Matrix3d k = skew(phi / theta);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * k +
         (1.0 - std::cos(theta)) * k * k;
}

// Rotation-vector log of a proper rotation. Near angle pi the off-diagonal
// formula degenerates; the axis is recovered from the largest diagonal of
// R + I instead.
inline Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Eigen::Vector3d w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                          r(1, 0) - r(0, 1));
  if (theta < 1e-7) {
    return 0.5 * w;
  }
  if (theta > M_PI - 1e-4) {
    const Eigen::Matrix3d s = 0.5 * (r + Eigen::Matrix3d::Identity());
    int a = 0;
    s.diagonal().maxCoeff(&a);
    Eigen::Vector3d axis = s.col(a) / std::sqrt(std::max(s(a, a), 1e-12));
    axis.normalize();
    // sign of the axis from the off-diagonal part where it is still usable
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (0.5 * theta / std::sin(theta)) * w;
}

// Inverse of the left Jacobian of SO(3) at phi; maps a left-trivialized
// perturbation of the rotation into a perturbation of log coordinates.
inline Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  if (theta < 1e-6) {
    return Eigen::Matrix3d::Identity() - 0.5 * k + (1.0 / 12.0) * k * k;
  }
  const double half = 0.5 * theta;
  const double coef =
      (1.0 / (theta * theta)) * (1.0 - half * std::cos(half) / std::sin(half));
  return Eigen::Matrix3d::Identity() - 0.5 * k + coef * k * k;
}

inline Eigen::Matrix3d rpy_to_rotation(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace cfmpc
