#include "cfmpc/rigid_body.hpp"

#include "cfmpc/so3.hpp"
#include "json_helpers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cfmpc {

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

void check_dim(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected length " +
                                std::to_string(n) + ", got " +
                                std::to_string(v.size()));
  }
}

void check_point(const RobotModel& model, const BodyPoint& point) {
  if (point.link < 1 || point.link > model.dof()) {
    throw std::invalid_argument("BodyPoint: link index " +
                                std::to_string(point.link) +
                                " outside chain of length " +
                                std::to_string(model.dof()));
  }
}

}  // namespace

RobotModel::RobotModel(std::vector<JointSpec> joints, std::vector<LinkSpec> links,
                       JointLimits limits, Eigen::Vector3d gravity,
                       Eigen::Matrix3d ee_rotation, Eigen::Vector3d ee_translation)
    : joints_(std::move(joints)),
      links_(std::move(links)),
      limits_(std::move(limits)),
      gravity_(std::move(gravity)),
      ee_rotation_(std::move(ee_rotation)),
      ee_translation_(std::move(ee_translation)) {
  const int n = static_cast<int>(joints_.size());
  if (n == 0) throw std::invalid_argument("RobotModel: empty chain");
  if (static_cast<int>(links_.size()) != n) {
    throw std::invalid_argument("RobotModel: joint/link count mismatch");
  }
  for (int i = 0; i < n; ++i) {
    auto& jnt = joints_[i];
    const double norm_err = std::abs(jnt.axis.norm() - 1.0);
    if (norm_err > 1e-12) {
      throw std::invalid_argument("RobotModel: joint " + std::to_string(i + 1) +
                                  " axis is not unit norm");
    }
    jnt.axis.normalize();
    if ((jnt.parent_rotation.transpose() * jnt.parent_rotation -
         Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() > 1e-9) {
      throw std::invalid_argument("RobotModel: joint " + std::to_string(i + 1) +
                                  " parent rotation is not orthonormal");
    }
    const auto& lnk = links_[i];
    if (!(lnk.mass > 0.0)) {
      throw std::invalid_argument("RobotModel: link " + std::to_string(i + 1) +
                                  " mass must be positive");
    }
    if ((lnk.inertia - lnk.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
      throw std::invalid_argument("RobotModel: link " + std::to_string(i + 1) +
                                  " inertia is not symmetric");
    }
    Eigen::LLT<Eigen::Matrix3d> llt(
        0.5 * (lnk.inertia + lnk.inertia.transpose()));
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("RobotModel: link " + std::to_string(i + 1) +
                                  " inertia is not positive-definite");
    }
  }
  check_dim(limits_.q_min, n, "q_min");
  check_dim(limits_.q_max, n, "q_max");
  check_dim(limits_.v_max, n, "v_max");
  check_dim(limits_.u_min, n, "u_min");
  check_dim(limits_.u_max, n, "u_max");
  if (!((limits_.q_min.array() < limits_.q_max.array()).all())) {
    throw std::invalid_argument("RobotModel: q_min must be < q_max elementwise");
  }
  if (!((limits_.u_min.array() < limits_.u_max.array()).all())) {
    throw std::invalid_argument("RobotModel: u_min must be < u_max elementwise");
  }
  if (!((limits_.v_max.array() > 0.0).all())) {
    throw std::invalid_argument("RobotModel: v_max must be positive");
  }
  if (!gravity_.allFinite()) {
    throw std::invalid_argument("RobotModel: gravity must be finite");
  }
}

RobotModel RobotModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("RobotModel: cannot open " + path);
  detail::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::invalid_argument("RobotModel: parse error in " + path + ": " +
                                e.what());
  }
  const int version = detail::value_or(doc, "format_version", 0);
  if (version != 1) {
    throw std::invalid_argument("RobotModel: unsupported format_version in " +
                                path);
  }
  const auto& jjoints = doc.at("joints");
  const auto& jlinks = doc.at("links");
  const int n = static_cast<int>(jjoints.size());

  std::vector<JointSpec> joints;
  joints.reserve(n);
  for (const auto& jj : jjoints) {
    JointSpec spec;
    spec.parent_translation = detail::to_vec3(jj.at("parent_translation_m"),
                                              "joint parent_translation_m");
    const Eigen::Vector3d rpy =
        jj.contains("parent_rpy_rad")
            ? detail::to_vec3(jj.at("parent_rpy_rad"), "joint parent_rpy_rad")
            : Eigen::Vector3d::Zero();
    spec.parent_rotation = rpy_to_rotation(rpy.x(), rpy.y(), rpy.z());
    spec.axis = detail::to_vec3(jj.at("axis"), "joint axis");
    joints.push_back(spec);
  }

  std::vector<LinkSpec> links;
  links.reserve(n);
  for (const auto& jl : jlinks) {
    LinkSpec spec;
    spec.mass = jl.at("mass_kg").get<double>();
    spec.com = detail::to_vec3(jl.at("com_m"), "link com_m");
    const Eigen::VectorXd i6 =
        detail::to_vecn(jl.at("inertia_kgm2"), 6, "link inertia_kgm2");
    // [ixx, iyy, izz, ixy, ixz, iyz]
    spec.inertia << i6[0], i6[3], i6[4], i6[3], i6[1], i6[5], i6[4], i6[5], i6[2];
    links.push_back(spec);
  }

  const auto& jlim = doc.at("limits");
  JointLimits limits;
  limits.q_min = detail::to_vecn(jlim.at("q_min_rad"), n, "q_min_rad");
  limits.q_max = detail::to_vecn(jlim.at("q_max_rad"), n, "q_max_rad");
  limits.v_max = detail::to_vecn(jlim.at("v_max_radps"), n, "v_max_radps");
  limits.u_max = detail::to_vecn(jlim.at("u_max_Nm"), n, "u_max_Nm");
  limits.u_min = jlim.contains("u_min_Nm")
                     ? detail::to_vecn(jlim.at("u_min_Nm"), n, "u_min_Nm")
                     : Eigen::VectorXd(-limits.u_max);

  const Eigen::Vector3d gravity =
      detail::to_vec3(doc.at("gravity_mps2"), "gravity_mps2");

  Eigen::Matrix3d ee_rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d ee_trans = Eigen::Vector3d::Zero();
  if (doc.contains("end_effector")) {
    const auto& jee = doc.at("end_effector");
    ee_trans = detail::to_vec3(jee.at("translation_m"), "ee translation_m");
    if (jee.contains("rpy_rad")) {
      const Eigen::Vector3d rpy = detail::to_vec3(jee.at("rpy_rad"), "ee rpy_rad");
      ee_rot = rpy_to_rotation(rpy.x(), rpy.y(), rpy.z());
    }
  }

  RobotModel model(std::move(joints), std::move(links), std::move(limits),
                   gravity, ee_rot, ee_trans);
  model.set_name(detail::value_or<std::string>(doc, "name", "unnamed"));
  return model;
}

FrameSet compute_frames(const RobotModel& model, const Eigen::VectorXd& q) {
  const int n = model.dof();
  check_dim(q, n, "q");
  check_finite(q, "q");
  FrameSet frames;
  frames.rotation.resize(n);
  frames.origin.resize(n);
  frames.axis.resize(n);
  Eigen::Matrix3d r_parent = Eigen::Matrix3d::Identity();
  Eigen::Vector3d o_parent = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const JointSpec& jnt = model.joint(i);
    const Eigen::Matrix3d r_pre = r_parent * jnt.parent_rotation;
    frames.origin[i] = o_parent + r_parent * jnt.parent_translation;
    frames.axis[i] = r_pre * jnt.axis;
    frames.rotation[i] =
        r_pre * Eigen::AngleAxisd(q[i], jnt.axis).toRotationMatrix();
    r_parent = frames.rotation[i];
    o_parent = frames.origin[i];
  }
  return frames;
}

FramePlacement forward_kinematics(const RobotModel& model, const FrameSet& frames,
                                  const BodyPoint& point) {
  check_point(model, point);
  const int l = point.link - 1;
  return {frames.origin[l] + frames.rotation[l] * point.offset,
          frames.rotation[l]};
}

FramePlacement forward_kinematics(const RobotModel& model,
                                  const Eigen::VectorXd& q,
                                  const BodyPoint& point) {
  return forward_kinematics(model, compute_frames(model, q), point);
}

FramePlacement ee_placement(const RobotModel& model, const FrameSet& frames) {
  const int l = model.dof() - 1;
  return {frames.origin[l] + frames.rotation[l] * model.ee_translation(),
          frames.rotation[l] * model.ee_rotation()};
}

Eigen::MatrixXd point_jacobian(const RobotModel& model, const FrameSet& frames,
                               const BodyPoint& point) {
  check_point(model, point);
  const int n = model.dof();
  const int l = point.link - 1;
  const Eigen::Vector3d p =
      frames.origin[l] + frames.rotation[l] * point.offset;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3, n);
  for (int k = 0; k <= l; ++k) {
    jac.col(k) = frames.axis[k].cross(p - frames.origin[k]);
  }
  return jac;
}

Eigen::MatrixXd point_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                               const BodyPoint& point) {
  return point_jacobian(model, compute_frames(model, q), point);
}

Eigen::MatrixXd angular_jacobian(const RobotModel& model, const FrameSet& frames,
                                 int link) {
  const int n = model.dof();
  if (link < 1 || link > n) {
    throw std::invalid_argument("angular_jacobian: bad link index");
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3, n);
  for (int k = 0; k < link; ++k) jac.col(k) = frames.axis[k];
  return jac;
}

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q) {
  const int n = model.dof();
  const FrameSet frames = compute_frames(model, q);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd jc(3, n), jw(3, n);
  for (int l = 0; l < n; ++l) {
    const LinkSpec& lnk = model.link(l);
    const Eigen::Vector3d com =
        frames.origin[l] + frames.rotation[l] * lnk.com;
    jc.setZero();
    jw.setZero();
    for (int k = 0; k <= l; ++k) {
      jc.col(k) = frames.axis[k].cross(com - frames.origin[k]);
      jw.col(k) = frames.axis[k];
    }
    const Eigen::Matrix3d iw =
        frames.rotation[l] * lnk.inertia * frames.rotation[l].transpose();
    m.noalias() += lnk.mass * jc.transpose() * jc;
    m.noalias() += jw.transpose() * iw * jw;
  }
  return 0.5 * (m + m.transpose());
}

namespace {

// Per-link state of the Newton-Euler recursion, world frame. Gravity enters
// through a fictitious base acceleration of -g.
struct RneaWork {
  std::vector<Eigen::Vector3d> axis, origin, com, delta_o, rc;
  std::vector<Eigen::Matrix3d> iw;
  std::vector<Eigen::Vector3d> w, dw, ao, ac;   // kinematics
  std::vector<Eigen::Vector3d> ff, nn;          // joint force / moment about origin
  Eigen::VectorXd qdd;                          // the acceleration input
  Eigen::VectorXd tau;
};

RneaWork rnea_run(const RobotModel& model, const FrameSet& frames,
                  const Eigen::VectorXd& v, const Eigen::VectorXd& a) {
  const int n = model.dof();
  RneaWork rw;
  rw.axis = frames.axis;
  rw.origin = frames.origin;
  rw.com.resize(n);
  rw.delta_o.resize(n);
  rw.rc.resize(n);
  rw.iw.resize(n);
  rw.w.resize(n);
  rw.dw.resize(n);
  rw.ao.resize(n);
  rw.ac.resize(n);
  rw.ff.resize(n);
  rw.nn.resize(n);
  rw.qdd = a;
  rw.tau.resize(n);

  Eigen::Vector3d w_prev = Eigen::Vector3d::Zero();
  Eigen::Vector3d dw_prev = Eigen::Vector3d::Zero();
  Eigen::Vector3d ao_prev = -model.gravity();
  Eigen::Vector3d o_prev = Eigen::Vector3d::Zero();
  for (int l = 0; l < n; ++l) {
    const LinkSpec& lnk = model.link(l);
    rw.com[l] = frames.origin[l] + frames.rotation[l] * lnk.com;
    rw.iw[l] = frames.rotation[l] * lnk.inertia * frames.rotation[l].transpose();
    rw.delta_o[l] = frames.origin[l] - o_prev;
    rw.rc[l] = rw.com[l] - frames.origin[l];

    rw.w[l] = w_prev + frames.axis[l] * v[l];
    rw.dw[l] = dw_prev + frames.axis[l] * a[l] +
               w_prev.cross(frames.axis[l]) * v[l];
    rw.ao[l] = ao_prev + dw_prev.cross(rw.delta_o[l]) +
               w_prev.cross(w_prev.cross(rw.delta_o[l]));
    rw.ac[l] = rw.ao[l] + rw.dw[l].cross(rw.rc[l]) +
               rw.w[l].cross(rw.w[l].cross(rw.rc[l]));

    w_prev = rw.w[l];
    dw_prev = rw.dw[l];
    ao_prev = rw.ao[l];
    o_prev = frames.origin[l];
  }

  Eigen::Vector3d f_child = Eigen::Vector3d::Zero();
  Eigen::Vector3d n_child = Eigen::Vector3d::Zero();
  for (int l = n - 1; l >= 0; --l) {
    const LinkSpec& lnk = model.link(l);
    const Eigen::Vector3d force = lnk.mass * rw.ac[l];
    const Eigen::Vector3d moment =
        rw.iw[l] * rw.dw[l] + rw.w[l].cross(rw.iw[l] * rw.w[l]);
    rw.ff[l] = force + f_child;
    rw.nn[l] = moment + n_child + rw.rc[l].cross(force);
    if (l + 1 < n) {
      rw.nn[l] += (rw.origin[l + 1] - rw.origin[l]).cross(f_child);
    }
    rw.tau[l] = rw.axis[l].dot(rw.nn[l]);
    f_child = rw.ff[l];
    n_child = rw.nn[l];
  }
  return rw;
}

}  // namespace

Eigen::VectorXd inverse_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& a) {
  const int n = model.dof();
  check_dim(v, n, "v");
  check_dim(a, n, "a");
  check_finite(v, "v");
  check_finite(a, "a");
  const FrameSet frames = compute_frames(model, q);
  return rnea_run(model, frames, v, a).tau;
}

Eigen::VectorXd bias_forces(const RobotModel& model, const JointState& state) {
  return inverse_dynamics(model, state.q, state.v,
                          Eigen::VectorXd::Zero(model.dof()));
}

Eigen::VectorXd gravity_torque(const RobotModel& model,
                               const Eigen::VectorXd& q) {
  const int n = model.dof();
  return inverse_dynamics(model, q, Eigen::VectorXd::Zero(n),
                          Eigen::VectorXd::Zero(n));
}

Eigen::VectorXd forward_dynamics(const RobotModel& model, const JointState& state,
                                 const Eigen::VectorXd& u,
                                 const std::vector<PointForce>& contacts) {
  const int n = model.dof();
  check_dim(u, n, "u");
  check_finite(u, "u");
  const FrameSet frames = compute_frames(model, state.q);
  Eigen::VectorXd rhs = u - rnea_run(model, frames, state.v,
                                     Eigen::VectorXd::Zero(n))
                                .tau;
  for (const auto& c : contacts) {
    if (!c.force.allFinite()) {
      throw std::invalid_argument("forward_dynamics: non-finite contact force");
    }
    rhs.noalias() += point_jacobian(model, frames, c.point).transpose() * c.force;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(mass_matrix(model, state.q));
  return llt.solve(rhs);
}

namespace {

// d tau / d q and d tau / d v of the Newton-Euler recursion at fixed joint
// acceleration. Chain rule of the world-frame recursion; the geometric
// derivative of any quantity fixed in link j under joint m is a cross
// product with axis m (m proximal).
void rnea_partials(const RobotModel& model, const RneaWork& rw,
                   const Eigen::VectorXd& v, Eigen::MatrixXd& dtau_dq,
                   Eigen::MatrixXd& dtau_dv) {
  const int n = model.dof();
  dtau_dq.resize(n, n);
  dtau_dv.resize(n, n);

  std::vector<Eigen::Vector3d> da(n), d_do(n), drc(n);
  std::vector<Eigen::Matrix3d> diw(n);
  std::vector<Eigen::Vector3d> dw(n), ddw(n), dao(n), dac(n), df(n), dn(n);

  for (int m = 0; m < n; ++m) {
    const Eigen::Vector3d& am = rw.axis[m];

    // --- configuration direction m ---
    Eigen::Vector3d dw_prev = Eigen::Vector3d::Zero();
    Eigen::Vector3d ddw_prev = Eigen::Vector3d::Zero();
    Eigen::Vector3d dao_prev = Eigen::Vector3d::Zero();
    Eigen::Vector3d do_prev = Eigen::Vector3d::Zero();
    Eigen::Vector3d w_prev = Eigen::Vector3d::Zero();
    Eigen::Vector3d dwp_prev = Eigen::Vector3d::Zero();  // dw of parent (nominal)
    for (int l = 0; l < n; ++l) {
      da[l] = (m < l) ? am.cross(rw.axis[l]) : Eigen::Vector3d::Zero();
      const Eigen::Vector3d do_l =
          (m < l) ? Eigen::Vector3d(am.cross(rw.origin[l] - rw.origin[m]))
                  : Eigen::Vector3d::Zero();
      const Eigen::Vector3d dc_l =
          (m <= l) ? Eigen::Vector3d(am.cross(rw.com[l] - rw.origin[m]))
                   : Eigen::Vector3d::Zero();
      d_do[l] = do_l - do_prev;
      drc[l] = dc_l - do_l;
      if (m <= l) {
        diw[l] = skew(am) * rw.iw[l] - rw.iw[l] * skew(am);
      } else {
        diw[l].setZero();
      }

      dw[l] = dw_prev + da[l] * v[l];
      ddw[l] = ddw_prev + da[l] * rw.qdd[l] +
               (dw_prev.cross(rw.axis[l]) + w_prev.cross(da[l])) * v[l];
      dao[l] = dao_prev + ddw_prev.cross(rw.delta_o[l]) +
               dwp_prev.cross(d_do[l]) +
               dw_prev.cross(w_prev.cross(rw.delta_o[l])) +
               w_prev.cross(dw_prev.cross(rw.delta_o[l]) +
                            w_prev.cross(d_do[l]));
      dac[l] = dao[l] + ddw[l].cross(rw.rc[l]) + rw.dw[l].cross(drc[l]) +
               dw[l].cross(rw.w[l].cross(rw.rc[l])) +
               rw.w[l].cross(dw[l].cross(rw.rc[l]) + rw.w[l].cross(drc[l]));

      dw_prev = dw[l];
      ddw_prev = ddw[l];
      dao_prev = dao[l];
      do_prev = do_l;
      w_prev = rw.w[l];
      dwp_prev = rw.dw[l];
    }
    Eigen::Vector3d df_child = Eigen::Vector3d::Zero();
    Eigen::Vector3d dn_child = Eigen::Vector3d::Zero();
    for (int l = n - 1; l >= 0; --l) {
      const double mass = model.link(l).mass;
      const Eigen::Vector3d force = mass * rw.ac[l];
      const Eigen::Vector3d dforce = mass * dac[l];
      Eigen::Vector3d dmoment = diw[l] * rw.dw[l] + rw.iw[l] * ddw[l] +
                                dw[l].cross(rw.iw[l] * rw.w[l]) +
                                rw.w[l].cross(diw[l] * rw.w[l] +
                                              rw.iw[l] * dw[l]);
      df[l] = dforce + df_child;
      dn[l] = dmoment + dn_child + drc[l].cross(force) + rw.rc[l].cross(dforce);
      if (l + 1 < n) {
        const Eigen::Vector3d delta = rw.origin[l + 1] - rw.origin[l];
        const Eigen::Vector3d ddelta = d_do[l + 1];
        // f_child here is the nominal child force, delta its lever arm
        dn[l] += ddelta.cross(rw.ff[l + 1]) + delta.cross(df_child);
      }
      dtau_dq(l, m) = da[l].dot(rw.nn[l]) + rw.axis[l].dot(dn[l]);
      df_child = df[l];
      dn_child = dn[l];
    }

    // --- velocity direction m ---
    dw_prev.setZero();
    ddw_prev.setZero();
    dao_prev.setZero();
    w_prev.setZero();
    for (int l = 0; l < n; ++l) {
      dw[l] = dw_prev + ((l == m) ? rw.axis[l] : Eigen::Vector3d::Zero());
      ddw[l] = ddw_prev + dw_prev.cross(rw.axis[l]) * v[l] +
               ((l == m) ? w_prev.cross(rw.axis[l]) : Eigen::Vector3d::Zero());
      dao[l] = dao_prev + ddw_prev.cross(rw.delta_o[l]) +
               dw_prev.cross(w_prev.cross(rw.delta_o[l])) +
               w_prev.cross(dw_prev.cross(rw.delta_o[l]));
      dac[l] = dao[l] + ddw[l].cross(rw.rc[l]) +
               dw[l].cross(rw.w[l].cross(rw.rc[l])) +
               rw.w[l].cross(dw[l].cross(rw.rc[l]));
      dw_prev = dw[l];
      ddw_prev = ddw[l];
      dao_prev = dao[l];
      w_prev = rw.w[l];
    }
    df_child.setZero();
    dn_child.setZero();
    for (int l = n - 1; l >= 0; --l) {
      const double mass = model.link(l).mass;
      const Eigen::Vector3d dforce = mass * dac[l];
      const Eigen::Vector3d dmoment = rw.iw[l] * ddw[l] +
                                      dw[l].cross(rw.iw[l] * rw.w[l]) +
                                      rw.w[l].cross(rw.iw[l] * dw[l]);
      df[l] = dforce + df_child;
      dn[l] = dmoment + dn_child + rw.rc[l].cross(dforce);
      if (l + 1 < n) {
        dn[l] += (rw.origin[l + 1] - rw.origin[l]).cross(df_child);
      }
      dtau_dv(l, m) = rw.axis[l].dot(dn[l]);
      df_child = df[l];
      dn_child = dn[l];
    }
  }
}

}  // namespace

DynamicsDerivatives forward_dynamics_derivatives(
    const RobotModel& model, const JointState& state, const Eigen::VectorXd& u,
    const std::vector<PointSpring>& contacts) {
  const int n = model.dof();
  const FrameSet frames = compute_frames(model, state.q);

  std::vector<PointForce> forces;
  forces.reserve(contacts.size());
  for (const auto& c : contacts) forces.push_back({c.point, c.force});
  const Eigen::VectorXd qdd = forward_dynamics(model, state, u, forces);

  // d tau / d(q, v) of inverse dynamics at the realized acceleration
  const RneaWork rw = rnea_run(model, frames, state.v, qdd);
  Eigen::MatrixXd did_dq, did_dv;
  rnea_partials(model, rw, state.v, did_dq, did_dv);

  // external torque partials: (dJ^T/dq) lambda + J^T dlambda/dq
  Eigen::MatrixXd dtau_ext_dq = Eigen::MatrixXd::Zero(n, n);
  for (const auto& c : contacts) {
    check_point(model, c.point);
    const int ll = c.point.link - 1;
    const Eigen::Vector3d p =
        frames.origin[ll] + frames.rotation[ll] * c.point.offset;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3, n);
    for (int k = 0; k <= ll; ++k) {
      jac.col(k) = frames.axis[k].cross(p - frames.origin[k]);
    }
    // dJ_k/dq_m = a_min x (a_max x (p - o_max)) for k, m <= ll
    for (int m = 0; m <= ll; ++m) {
      for (int k = 0; k <= ll; ++k) {
        const int lo = std::min(k, m);
        const int hi = std::max(k, m);
        const Eigen::Vector3d dj =
            rw.axis[lo].cross(rw.axis[hi].cross(p - rw.origin[hi]));
        dtau_ext_dq(k, m) += c.force.dot(dj);
      }
    }
    dtau_ext_dq.noalias() -= jac.transpose() * c.stiffness * jac;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(mass_matrix(model, state.q));
  DynamicsDerivatives out;
  out.dq = llt.solve(dtau_ext_dq - did_dq);
  out.dv = llt.solve(-did_dv);
  out.du = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return out;
}

DynamicsDerivatives forward_dynamics_derivatives_fd(
    const RobotModel& model, const JointState& state, const Eigen::VectorXd& u,
    const std::vector<PointSpring>& contacts, double step) {
  const int n = model.dof();
  const FrameSet frames0 = compute_frames(model, state.q);
  std::vector<Eigen::Vector3d> p0(contacts.size());
  for (size_t i = 0; i < contacts.size(); ++i) {
    p0[i] = forward_kinematics(model, frames0, contacts[i].point).position;
  }

  // exact spring behaviour around the nominal point: lambda(q) =
  // lambda0 - K (p(q) - p0)
  const auto accel = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                         const Eigen::VectorXd& uu) {
    const FrameSet frames = compute_frames(model, q);
    std::vector<PointForce> forces;
    forces.reserve(contacts.size());
    for (size_t i = 0; i < contacts.size(); ++i) {
      const Eigen::Vector3d p =
          forward_kinematics(model, frames, contacts[i].point).position;
      forces.push_back(
          {contacts[i].point,
           contacts[i].force - contacts[i].stiffness * (p - p0[i])});
    }
    return forward_dynamics(model, {q, v}, uu, forces);
  };

  DynamicsDerivatives out;
  out.dq.resize(n, n);
  out.dv.resize(n, n);
  out.du.resize(n, n);
  for (int m = 0; m < n; ++m) {
    Eigen::VectorXd qp = state.q, qm = state.q;
    qp[m] += step;
    qm[m] -= step;
    out.dq.col(m) = (accel(qp, state.v, u) - accel(qm, state.v, u)) / (2 * step);

    Eigen::VectorXd vp = state.v, vm = state.v;
    vp[m] += step;
    vm[m] -= step;
    out.dv.col(m) = (accel(state.q, vp, u) - accel(state.q, vm, u)) / (2 * step);

    Eigen::VectorXd up = u, um = u;
    up[m] += step;
    um[m] -= step;
    out.du.col(m) = (accel(state.q, state.v, up) - accel(state.q, state.v, um)) /
                    (2 * step);
  }
  return out;
}

}  // namespace cfmpc
