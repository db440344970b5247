#include "cfmpc/ddp.hpp"

#include "cfmpc/box_qp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfmpc::ddp {

BoxFddp::BoxFddp(SolverSettings settings) : settings_(settings) {}

std::vector<Eigen::VectorXd> BoxFddp::dynamics_gaps(const Problem& problem,
                                                    const Trajectory& traj) {
  const int horizon = problem.horizon();
  std::vector<Eigen::VectorXd> gaps(horizon + 1);
  gaps[0] = problem.initial_state() - traj.states[0];
  for (int t = 0; t < horizon; ++t) {
    gaps[t + 1] = problem.step(t, traj.states[t], traj.controls[t]) -
                  traj.states[t + 1];
  }
  return gaps;
}

double BoxFddp::total_cost(const Problem& problem, const Trajectory& traj) {
  double cost = 0.0;
  for (int t = 0; t < problem.horizon(); ++t) {
    cost += problem.running_cost(t, traj.states[t], traj.controls[t]);
  }
  return cost + problem.terminal_cost(traj.states.back());
}

bool BoxFddp::backward_pass(const Problem& problem, const Trajectory& traj,
                            const std::vector<Eigen::VectorXd>& gaps, double reg,
                            Gains& gains) const {
  const int horizon = problem.horizon();
  const int nx = problem.state_size();
  const int nu = problem.control_size();

  gains.feedforward.assign(horizon, Eigen::VectorXd::Zero(nu));
  gains.feedback.assign(horizon, Eigen::MatrixXd::Zero(nu, nx));
  gains.expected_linear = 0.0;
  gains.expected_quadratic = 0.0;
  gains.gradient_norm = 0.0;

  Eigen::VectorXd vx(nx);
  Eigen::MatrixXd vxx(nx, nx);
  problem.expand_terminal(traj.states[horizon], vx, vxx);
  vxx = 0.5 * (vxx + vxx.transpose());

  StageExpansion exp;
  for (int t = horizon - 1; t >= 0; --t) {
    problem.expand_stage(t, traj.states[t], traj.controls[t], exp);

    // deflect the value gradient through the downstream defect
    const Eigen::VectorXd vx_shifted = vx + vxx * gaps[t + 1];

    const Eigen::VectorXd qx = exp.lx + exp.fx.transpose() * vx_shifted;
    const Eigen::VectorXd qu = exp.lu + exp.fu.transpose() * vx_shifted;
    const Eigen::MatrixXd fxt_vxx = exp.fx.transpose() * vxx;
    Eigen::MatrixXd qxx = exp.lxx + fxt_vxx * exp.fx;
    Eigen::MatrixXd quu = exp.luu + exp.fu.transpose() * vxx * exp.fu;
    const Eigen::MatrixXd qux = exp.fu.transpose() * vxx * exp.fx;
    qxx = 0.5 * (qxx + qxx.transpose());
    quu = 0.5 * (quu + quu.transpose());
    quu.diagonal().array() += reg;

    const Eigen::VectorXd lo = problem.control_lower() - traj.controls[t];
    const Eigen::VectorXd hi = problem.control_upper() - traj.controls[t];
    const BoxQpResult qp = solve_box_qp(quu, qu, lo, hi,
                                        Eigen::VectorXd::Zero(nu));
    if (qp.factorization_failed) return false;

    gains.feedforward[t] = qp.x;
    // feedback only on free dims; clamped rows stay zero
    gains.feedback[t] = -qp.free_hessian_inverse * qux;

    const Eigen::VectorXd& k = gains.feedforward[t];
    const Eigen::MatrixXd& kk = gains.feedback[t];
    gains.expected_linear += k.dot(qu);
    gains.expected_quadratic += k.dot(quu * k);
    for (int i = 0; i < nu; ++i) {
      if (!qp.clamped[i]) {
        gains.gradient_norm = std::max(gains.gradient_norm, std::abs(qu[i]));
      }
    }

    vx = qx + kk.transpose() * (quu * k + qu) + qux.transpose() * k;
    vxx = qxx + kk.transpose() * quu * kk + kk.transpose() * qux +
          qux.transpose() * kk;
    vxx = 0.5 * (vxx + vxx.transpose());
  }
  return true;
}

Candidate BoxFddp::forward_pass(const Problem& problem, const Trajectory& traj,
                                const Gains& gains,
                                const std::vector<Eigen::VectorXd>& gaps,
                                double alpha) const {
  const int horizon = problem.horizon();
  Candidate cand;
  cand.trajectory.states.resize(horizon + 1);
  cand.trajectory.controls.resize(horizon);

  const Eigen::VectorXd& lo = problem.control_lower();
  const Eigen::VectorXd& hi = problem.control_upper();

  cand.trajectory.states[0] =
      problem.initial_state() - (1.0 - alpha) * gaps[0];
  cand.cost = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd dx = cand.trajectory.states[t] - traj.states[t];
    Eigen::VectorXd u = traj.controls[t] + alpha * gains.feedforward[t] +
                        gains.feedback[t] * dx;
    u = u.cwiseMax(lo).cwiseMin(hi);
    cand.trajectory.controls[t] = u;
    cand.cost += problem.running_cost(t, cand.trajectory.states[t], u);
    cand.trajectory.states[t + 1] =
        problem.step(t, cand.trajectory.states[t], u) -
        (1.0 - alpha) * gaps[t + 1];
    if (!cand.trajectory.states[t + 1].allFinite()) {
      cand.finite = false;
      return cand;
    }
  }
  cand.cost += problem.terminal_cost(cand.trajectory.states[horizon]);
  if (!std::isfinite(cand.cost)) cand.finite = false;
  return cand;
}

std::pair<Trajectory, SolverStats> BoxFddp::solve(
    const Problem& problem, std::optional<Trajectory> warm_start) const {
  const auto t_begin = std::chrono::steady_clock::now();
  const int horizon = problem.horizon();
  const int nx = problem.state_size();
  const int nu = problem.control_size();

  Trajectory traj;
  if (warm_start) {
    traj = std::move(*warm_start);
    if (static_cast<int>(traj.states.size()) != horizon + 1 ||
        static_cast<int>(traj.controls.size()) != horizon) {
      throw std::invalid_argument("BoxFddp::solve: warm start length mismatch");
    }
    for (const auto& x : traj.states) {
      if (x.size() != nx) {
        throw std::invalid_argument("BoxFddp::solve: warm start state size");
      }
    }
    for (auto& u : traj.controls) {
      if (u.size() != nu) {
        throw std::invalid_argument("BoxFddp::solve: warm start control size");
      }
      u = u.cwiseMax(problem.control_lower()).cwiseMin(problem.control_upper());
    }
  } else {
    traj.states.assign(horizon + 1, problem.initial_state());
    traj.controls.assign(
        horizon, Eigen::VectorXd::Zero(nu)
                     .cwiseMax(problem.control_lower())
                     .cwiseMin(problem.control_upper()));
  }
  // make the incumbent a real trajectory from the measured state, so
  // candidate costs are comparable and acceptance can stay monotone; if the
  // rollout diverges keep the anchored states and let the gap machinery
  // contract the defects instead
  const auto try_rollout = [&](const std::vector<Eigen::VectorXd>& controls) {
    Trajectory rolled;
    rolled.controls = controls;
    rolled.states.assign(horizon + 1, problem.initial_state());
    for (int t = 0; t < horizon; ++t) {
      rolled.states[t + 1] = problem.step(t, rolled.states[t], controls[t]);
      if (!rolled.states[t + 1].allFinite()) return std::optional<Trajectory>{};
    }
    return std::optional<Trajectory>{std::move(rolled)};
  };
  if (auto rolled = try_rollout(traj.controls)) {
    traj = std::move(*rolled);
  } else {
    const std::vector<Eigen::VectorXd> zeros(
        horizon, Eigen::VectorXd::Zero(nu)
                     .cwiseMax(problem.control_lower())
                     .cwiseMin(problem.control_upper()));
    if (auto rolled = try_rollout(zeros)) {
      traj = std::move(*rolled);
    } else {
      traj.states.assign(horizon + 1, problem.initial_state());
    }
  }

  SolverStats stats;
  double cost = total_cost(problem, traj);
  if (!std::isfinite(cost)) {
    cost = std::numeric_limits<double>::infinity();
  }
  stats.cost_history.push_back(cost);
  double reg = settings_.reg_init;
  Gains gains;

  for (int iter = 0; iter < settings_.max_iterations; ++iter) {
    stats.iterations = iter + 1;
    auto gaps = dynamics_gaps(problem, traj);
    double gap_norm = 0.0;
    for (const auto& g : gaps) {
      gap_norm = std::max(gap_norm, g.template lpNorm<Eigen::Infinity>());
    }
    const bool feasible = gap_norm <= settings_.gap_tolerance;

    bool backward_ok = backward_pass(problem, traj, gaps, reg, gains);
    while (!backward_ok) {
      reg *= settings_.reg_increase;
      if (reg > settings_.reg_max) {
        stats.stalled = true;
        break;
      }
      backward_ok = backward_pass(problem, traj, gaps, reg, gains);
    }
    if (stats.stalled) break;

    // expected model decrease at full step; converged when both the local
    // model and the stage gradients are flat and the rollout is consistent
    const double model_full =
        gains.expected_linear + 0.5 * gains.expected_quadratic;
    if (feasible && (std::abs(model_full) < settings_.cost_tolerance ||
                     gains.gradient_norm < settings_.gradient_tolerance)) {
      stats.converged = true;
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < settings_.line_search_steps; ++ls, alpha *= 0.5) {
      const Candidate cand = forward_pass(problem, traj, gains, gaps, alpha);
      if (!cand.finite) {
        ++stats.rejected_steps;
        continue;
      }
      const double model =
          alpha * gains.expected_linear +
          0.5 * alpha * alpha * gains.expected_quadratic;
      const double actual = cand.cost - cost;
      // monotone acceptance: never take a cost increase, and ask for an
      // Armijo fraction of the model decrease when the model predicts one
      const bool model_ok =
          model <= 0.0 ? actual <= settings_.accept_ratio * model
                       : actual <= 0.0;
      if (model_ok) {
        traj = cand.trajectory;
        const double improvement = cost - cand.cost;
        cost = cand.cost;
        stats.cost_history.push_back(cost);
        stats.step_length = alpha;
        accepted = true;
        reg = std::max(reg * settings_.reg_decrease, settings_.reg_min);
        if (feasible && alpha >= 1.0 &&
            improvement < settings_.cost_tolerance) {
          stats.converged = true;
        }
        break;
      }
      ++stats.rejected_steps;
    }

    if (!accepted) {
      reg *= settings_.reg_increase;
      if (reg > settings_.reg_max) {
        stats.stalled = true;
        break;
      }
    } else if (stats.converged) {
      break;
    }
  }

  stats.final_cost = cost;
  stats.regularization = reg;
  const auto gaps = dynamics_gaps(problem, traj);
  for (const auto& g : gaps) {
    stats.gap_norm = std::max(stats.gap_norm, g.template lpNorm<Eigen::Infinity>());
  }
  stats.wall_time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t_begin)
                          .count();
  return {std::move(traj), stats};
}

}  // namespace cfmpc::ddp
