#include "cfmpc/contact.hpp"

#include "support/models.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace cfmpc;

namespace {

Eigen::VectorXd random_vec(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> uni(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uni(rng);
  return v;
}

// Synthetic feedback: a force at the world position of a chosen body point.
ContactFeedback synthetic_feedback(const RobotModel& model,
                                   const Eigen::VectorXd& q,
                                   const BodyPoint& point,
                                   const Eigen::Vector3d& force, double t = 0.0) {
  return {forward_kinematics(model, q, point).position, force, point.link, t};
}

}  // namespace

TEST_CASE("contact frame: axis-aligned force") {
  const Eigen::Matrix3d frame = build_contact_frame({0, 0, 10});
  CHECK(frame.col(2).isApprox(Eigen::Vector3d(0, 0, 1), 1e-14));
  CHECK((frame.transpose() * frame - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("contact frame: oblique force normalizes to the third column") {
  const Eigen::Matrix3d frame = build_contact_frame({3, 4, 0});
  CHECK(frame.col(2).isApprox(Eigen::Vector3d(0.6, 0.8, 0), 1e-12));
  CHECK((frame.transpose() * frame - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("contact frame: proper rotation for random forces") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(1.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d force = mag(rng) * Eigen::Vector3d::Random().normalized();
    const Eigen::Matrix3d frame = build_contact_frame(force);
    CHECK(std::abs(frame.determinant() - 1.0) < 1e-12);
    CHECK(frame.col(2).isApprox(force.normalized(), 1e-12));
  }
}

TEST_CASE("contact frame: near-zero force is rejected") {
  CHECK_THROWS_AS(build_contact_frame({0.1, 0.1, 0.1}), DegenerateContactFrame);
  CHECK_THROWS_AS(build_contact_frame({0, 0, 0}), DegenerateContactFrame);
}

TEST_CASE("compute_theta: rest offset is |force| / k_env along the force") {
  const RobotModel model = testing::planar3();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
  const double k_env = 3500.0;  // N/m
  const auto feedback =
      synthetic_feedback(model, q, BodyPoint{3, {0, 0, 0.1}}, {0, 0, 10.0});
  const ContactParams params = compute_theta(feedback, model, q, k_env);

  CHECK(params.rest_position.isApprox(
      feedback.position + Eigen::Vector3d(0, 0, 10.0 / 3500.0), 1e-12));
  CHECK((params.rest_position - feedback.position).norm() ==
        doctest::Approx(0.002857142857).epsilon(1e-9));
  // axis-aligned case: K_env = diag(0, 0, k_env)
  const Eigen::Matrix3d expected =
      Eigen::Vector3d(0, 0, k_env).asDiagonal().toDenseMatrix();
  CHECK((params.stiffness - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("compute_theta: spring closure at the feedback configuration") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const int dof = 2 + static_cast<int>(rng() % 6);
    const RobotModel model = testing::random_chain(rng, dof);
    const Eigen::VectorXd q = random_vec(rng, dof, 1.5);
    const BodyPoint point{1 + static_cast<int>(rng() % dof),
                          0.2 * Eigen::Vector3d::Random()};
    Eigen::Vector3d force = 15.0 * Eigen::Vector3d::Random();
    if (force.norm() < 1.0) force = Eigen::Vector3d(0, 0, 5.0);
    const auto feedback = synthetic_feedback(model, q, point, force);
    const ContactParams params = compute_theta(feedback, model, q, 3500.0);
    CHECK((spring_force(params, model, q) - force).norm() < 1e-9);
  }
}

TEST_CASE("compute_theta: stiffness eigenstructure is {0, 0, k_env}") {
  std::mt19937_64 rng(9);
  const RobotModel model = testing::planar3();
  const Eigen::VectorXd q = random_vec(rng, 3, 1.0);
  const auto feedback = synthetic_feedback(model, q, BodyPoint{2, {0, 0.02, 0.2}},
                                           {4.0, -6.0, 2.0});
  const double k_env = 3500.0;
  const ContactParams params = compute_theta(feedback, model, q, k_env);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(params.stiffness);
  CHECK(std::abs(eig.eigenvalues()[0]) < 1e-9);
  CHECK(std::abs(eig.eigenvalues()[1]) < 1e-9);
  CHECK(std::abs(eig.eigenvalues()[2] - k_env) < 1e-9);
  // K = R diag(0,0,k) R^T
  const Eigen::Matrix3d rebuilt =
      params.frame * Eigen::Vector3d(0, 0, k_env).asDiagonal() *
      params.frame.transpose();
  CHECK((params.stiffness - rebuilt).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("spring force: zero deformation, tangential displacement, scale") {
  const RobotModel model = testing::planar3();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
  const BodyPoint tip{3, {0, 0, 0.3}};
  const auto feedback = synthetic_feedback(model, q, tip, {7.0, 0, 0});
  const double k_env = 3500.0;
  ContactParams params = compute_theta(feedback, model, q, k_env);

  // zero deformation
  params.rest_position = forward_kinematics(model, q, tip).position;
  CHECK(spring_force(params, model, q).norm() < 1e-12);

  // displacing the rest point within the contact-frame xy-plane changes nothing
  const Eigen::Vector3d z = params.frame.col(2);
  params.rest_position += 0.05 * params.frame.col(0) - 0.03 * params.frame.col(1);
  CHECK(spring_force(params, model, q).norm() < 1e-9);

  // 4 mm of z-deformation at 3500 N/m is 14 N
  params.rest_position += 0.004 * z;
  CHECK(spring_force(params, model, q).norm() ==
        doctest::Approx(14.0).epsilon(1e-9));
}

TEST_CASE("tangential invariance of the attachment position") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> uni(-0.05, 0.05);
  for (int i = 0; i < 200; ++i) {
    const int dof = 3 + static_cast<int>(rng() % 4);
    const RobotModel model = testing::random_chain(rng, dof);
    const Eigen::VectorXd q = random_vec(rng, dof, 1.2);
    const BodyPoint point{dof, 0.15 * Eigen::Vector3d::Random()};
    const Eigen::Vector3d force = Eigen::Vector3d(2, -9, 4);
    const auto feedback = synthetic_feedback(model, q, point, force);
    ContactParams params = compute_theta(feedback, model, q, 3500.0);

    const Eigen::Vector3d f0 = spring_force(params, model, q);
    // shift the attachment within the contact-frame xy-plane
    const Eigen::Vector3d shift =
        uni(rng) * params.frame.col(0) + uni(rng) * params.frame.col(1);
    const FramePlacement place = forward_kinematics(model, q, point);
    params.attachment.offset += place.rotation.transpose() * shift;
    const Eigen::Vector3d f1 = spring_force(params, model, q);
    CHECK((f1 - f0).norm() < 1e-9);
  }
}

TEST_CASE("spring force jacobian: finite differences and rank structure") {
  std::mt19937_64 rng(21);
  const double step = 1e-7;
  for (int i = 0; i < 50; ++i) {
    const int dof = 2 + static_cast<int>(rng() % 5);
    const RobotModel model = testing::random_chain(rng, dof);
    const Eigen::VectorXd q = random_vec(rng, dof, 1.2);
    const BodyPoint point{1 + static_cast<int>(rng() % dof),
                          0.2 * Eigen::Vector3d::Random()};
    const auto feedback = synthetic_feedback(model, q, point, {3, 5, -8});
    const ContactParams params = compute_theta(feedback, model, q, 3500.0);

    const Eigen::MatrixXd jac = spring_force_jacobian(params, model, q);
    Eigen::MatrixXd fd(3, dof);
    for (int k = 0; k < dof; ++k) {
      Eigen::VectorXd qp = q, qm = q;
      qp[k] += step;
      qm[k] -= step;
      fd.col(k) =
          (spring_force(params, model, qp) - spring_force(params, model, qm)) /
          (2.0 * step);
    }
    const double scale = fd.cwiseAbs().maxCoeff() + 1e-9;
    CHECK((jac - fd).cwiseAbs().maxCoeff() / scale < 1e-6);

    // rows live in the span of the contact z-axis
    const Eigen::Vector3d z = params.frame.col(2);
    const Eigen::MatrixXd residual = jac - z * (z.transpose() * jac);
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-9 * (scale + 1.0));
  }
}

TEST_CASE("spring force jacobian: zero stiffness gives zero") {
  const RobotModel model = testing::planar3();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
  ContactParams params;
  params.stiffness.setZero();
  params.attachment = {2, {0, 0, 0.1}};
  params.link = 2;
  CHECK(spring_force_jacobian(params, model, q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("external torque: empty list, zero deformation, superposition") {
  const RobotModel model = testing::planar3();
  std::mt19937_64 rng(27);
  const Eigen::VectorXd q = random_vec(rng, 3, 0.8);

  CHECK(external_torque({}, model, q).norm() == 0.0);

  const auto fb1 = synthetic_feedback(model, q, BodyPoint{2, {0, 0, 0.3}},
                                      {0, 0, 12.0});
  ContactParams rest = compute_theta(fb1, model, q, 3500.0);
  rest.rest_position = forward_kinematics(model, q, rest.attachment).position;
  CHECK(external_torque({rest}, model, q).norm() < 1e-12);

  const auto fb2 = synthetic_feedback(model, q, BodyPoint{3, {0, 0, 0.2}},
                                      {5.0, 1.0, -3.0});
  const ContactParams c1 = compute_theta(fb1, model, q, 3500.0);
  const ContactParams c2 = compute_theta(fb2, model, q, 2000.0);
  const Eigen::VectorXd sum = external_torque({c1, c2}, model, q);
  const Eigen::VectorXd separate =
      external_torque({c1}, model, q) + external_torque({c2}, model, q);
  CHECK((sum - separate).norm() < 1e-12);
}

TEST_CASE("compute_theta rejects non-positive stiffness") {
  const RobotModel model = testing::planar3();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
  const auto fb = synthetic_feedback(model, q, BodyPoint{1, {0, 0, 0.2}},
                                     {0, 0, 10.0});
  CHECK_THROWS_AS(compute_theta(fb, model, q, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_theta(fb, model, q, -100.0), std::invalid_argument);
}
