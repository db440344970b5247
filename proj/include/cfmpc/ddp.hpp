#pragma once

#include <Eigen/Core>

#include <optional>
#include <utility>
#include <vector>

namespace cfmpc::ddp {

// One stage's local expansion of the discrete dynamics and cost.
struct StageExpansion {
  Eigen::MatrixXd fx, fu;
  Eigen::VectorXd lx, lu;
  Eigen::MatrixXd lxx, luu;
  double cost = 0.0;
};

// Discrete-time optimal control problem with box-constrained controls.
// Implementations must be deterministic and safely callable from a single
// solver thread; the solver never caches state across calls.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int state_size() const = 0;
  virtual int control_size() const = 0;
  virtual int horizon() const = 0;
  virtual const Eigen::VectorXd& initial_state() const = 0;
  virtual const Eigen::VectorXd& control_lower() const = 0;
  virtual const Eigen::VectorXd& control_upper() const = 0;

  virtual Eigen::VectorXd step(int t, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const = 0;
  virtual double running_cost(int t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) const = 0;
  virtual double terminal_cost(const Eigen::VectorXd& x) const = 0;
  virtual void expand_stage(int t, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u,
                            StageExpansion& out) const = 0;
  virtual void expand_terminal(const Eigen::VectorXd& x, Eigen::VectorXd& lx,
                               Eigen::MatrixXd& lxx) const = 0;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;    // T + 1
  std::vector<Eigen::VectorXd> controls;  // T
};

struct SolverSettings {
  int max_iterations = 500;
  double cost_tolerance = 1e-6;    // on expected / actual improvement
  double gradient_tolerance = 1e-9;
  double reg_init = 1e-9;
  double reg_min = 1e-9;
  double reg_max = 1e9;
  double reg_increase = 10.0;
  double reg_decrease = 0.5;
  int line_search_steps = 11;      // alpha = 1, 1/2, ..., 2^-10
  double accept_ratio = 0.1;       // Armijo fraction of the model decrease
  double gap_tolerance = 1e-9;
};

struct SolverStats {
  int iterations = 0;
  double final_cost = 0.0;
  double gap_norm = 0.0;          // max dynamics defect after the solve
  double regularization = 0.0;
  double step_length = 0.0;       // last accepted alpha
  double wall_time_s = 0.0;
  bool converged = false;
  bool stalled = false;
  int rejected_steps = 0;
  std::vector<double> cost_history;  // accepted iterates, non-increasing
};

struct Gains {
  std::vector<Eigen::VectorXd> feedforward;       // k, T entries
  std::vector<Eigen::MatrixXd> feedback;          // K, T entries
  double expected_linear = 0.0;                   // sum k^T Qu
  double expected_quadratic = 0.0;                // sum k^T Quu k
  double gradient_norm = 0.0;                     // max |Qu| over free dims
};

struct Candidate {
  Trajectory trajectory;
  double cost = 0.0;
  bool finite = true;
};

class BoxFddp {
 public:
  explicit BoxFddp(SolverSettings settings = {});

  // Solves from the warm start (or from a constant-state, clamped-zero
  // control initialization). The returned controls satisfy the bounds
  // elementwise exactly.
  std::pair<Trajectory, SolverStats> solve(
      const Problem& problem, std::optional<Trajectory> warm_start = {}) const;

  const SolverSettings& settings() const { return settings_; }

  // Exposed pieces of one solver iteration (also used directly by tests).
  static std::vector<Eigen::VectorXd> dynamics_gaps(const Problem& problem,
                                                    const Trajectory& traj);
  static double total_cost(const Problem& problem, const Trajectory& traj);

  // Backward sweep at a given regularization; false when a stage subproblem
  // is not positive-definite and the caller must increase regularization.
  bool backward_pass(const Problem& problem, const Trajectory& traj,
                     const std::vector<Eigen::VectorXd>& gaps, double reg,
                     Gains& gains) const;

  // Rollout with step length alpha; contracts dynamics defects by (1-alpha).
  Candidate forward_pass(const Problem& problem, const Trajectory& traj,
                         const Gains& gains,
                         const std::vector<Eigen::VectorXd>& gaps,
                         double alpha) const;

 private:
  SolverSettings settings_;
};

}  // namespace cfmpc::ddp
