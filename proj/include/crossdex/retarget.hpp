#pragma once

#include <Eigen/Core>
#include <vector>

#include "crossdex/pose_model.hpp"
#include "crossdex/robot_hand.hpp"

namespace crossdex {

/// Similarity term of the per-timestep retargeting objective.
///  Position: absolute palm and fingertip positions.
///  Vector:   palm-to-fingertip relative positions.
///  DexPilot: Vector plus the relative positions between fingertip pairs
///            (pairwise term only; no distance-dependent switching weights).
enum class ObjectiveVariant { Position, Vector, DexPilot };

ObjectiveVariant objective_from_string(const std::string& name);
const char* to_string(ObjectiveVariant variant);

struct RetargetConfig {
  ObjectiveVariant objective = ObjectiveVariant::DexPilot;
  double scale = 1.0;             // human -> robot size ratio applied to keypoints
  double smoothness_weight = 1.0; // coefficient of ||q - q_prev||^2
  double target_weight = 1.0;     // test hook scaling the similarity term
  int max_iterations = 50;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-10;

  void validate() const;
};

/// Palm and fingertip targets in the robot hand base frame, tips aligned with
/// model.fingertips order.
struct KeypointTargets {
  Eigen::Vector3d palm = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> tips;
};

/// Per-iteration objective values of one retarget_step solve, for testing the
/// monotone-descent guarantee. objective[0] is the warm-start value.
struct SolveTrace {
  std::vector<double> objective;
  double final_gradient_norm = 0.0;
  int iterations = 0;
};

/// Ratio of robot palm->middle-fingertip distance to human wrist->middle-TIP
/// distance at the respective zero poses (clamped zero for the robot). Falls
/// back to the first tagged finger when the hand has no middle.
double default_scale(const RobotHandModel& model, const HandSkeleton& skeleton);

/// Selects the wrist and per-tag TIP keypoints for the robot's fingers and
/// scales them about the wrist. Human fingers without a robot counterpart drop.
KeypointTargets map_targets(const Keypoints& keypoints, const RobotHandModel& model,
                            double scale);

double objective_value(const RobotHandModel& model, const Eigen::VectorXd& q,
                       const KeypointTargets& targets, const RetargetConfig& config,
                       const Eigen::VectorXd& q_prev);

/// Exact gradient of objective_value, assembled from the geometric Jacobian.
Eigen::VectorXd objective_gradient(const RobotHandModel& model, const Eigen::VectorXd& q,
                                   const KeypointTargets& targets, const RetargetConfig& config,
                                   const Eigen::VectorXd& q_prev);

/// One warm-started solve of the box-constrained retargeting problem:
/// projected gradient descent with Armijo backtracking (c = 1e-4, halving)
/// and a Barzilai-Borwein initial step. Monotone from the warm start; output
/// always feasible; deterministic.
Eigen::VectorXd retarget_step(const RobotHandModel& model, const KeypointTargets& targets,
                              const Eigen::VectorXd& q_prev, const RetargetConfig& config,
                              SolveTrace* trace = nullptr);

/// Folds retarget_step over a target sequence, each output warm-starting the next.
std::vector<Eigen::VectorXd> retarget_trajectory(const RobotHandModel& model,
                                                 const std::vector<KeypointTargets>& targets,
                                                 const Eigen::VectorXd& q_init,
                                                 const RetargetConfig& config);

}  // namespace crossdex
