#include "crossdex/retarget.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crossdex {

ObjectiveVariant objective_from_string(const std::string& name) {
  if (name == "position") return ObjectiveVariant::Position;
  if (name == "vector") return ObjectiveVariant::Vector;
  if (name == "dexpilot") return ObjectiveVariant::DexPilot;
  throw std::invalid_argument("unknown objective \"" + name +
                              "\" (expected position/vector/dexpilot)");
}

const char* to_string(ObjectiveVariant variant) {
  switch (variant) {
    case ObjectiveVariant::Position: return "position";
    case ObjectiveVariant::Vector: return "vector";
    case ObjectiveVariant::DexPilot: return "dexpilot";
  }
  return "?";
}

void RetargetConfig::validate() const {
  if (scale <= 0.0) throw std::invalid_argument("retarget config: scale must be > 0");
  if (smoothness_weight < 0.0) {
    throw std::invalid_argument("retarget config: smoothness_weight must be >= 0");
  }
  if (max_iterations < 1) throw std::invalid_argument("retarget config: max_iterations >= 1");
  if (gradient_tolerance <= 0.0 || step_tolerance <= 0.0) {
    throw std::invalid_argument("retarget config: tolerances must be > 0");
  }
}

double default_scale(const RobotHandModel& model, const HandSkeleton& skeleton) {
  int finger_index = 0;
  for (int i = 0; i < model.num_fingers(); ++i) {
    if (model.fingertips[i].tag == Finger::Middle) finger_index = i;
  }
  const Finger tag = model.fingertips[finger_index].tag;

  const HandFrames frames = fk(model, clamp(model, Eigen::VectorXd::Zero(model.dof())));
  const double robot_length = (frames.tips[finger_index] - frames.palm).norm();

  const Keypoints keypoints = hand_keypoints(skeleton, HandPose::Zero());
  const int tip = keypoint_tip(static_cast<int>(tag));
  const double human_length = (keypoints.row(tip) - keypoints.row(0)).norm();
  if (human_length <= 0.0) {
    throw std::invalid_argument("default_scale: degenerate skeleton");
  }
  return robot_length / human_length;
}

KeypointTargets map_targets(const Keypoints& keypoints, const RobotHandModel& model,
                            double scale) {
  if (!keypoints.allFinite()) {
    throw std::invalid_argument("map_targets: non-finite keypoints");
  }
  if (scale <= 0.0) {
    throw std::invalid_argument("map_targets: scale must be > 0");
  }
  const Eigen::Vector3d wrist = keypoints.row(0);
  KeypointTargets targets;
  targets.palm = wrist;  // scaling about the wrist leaves the wrist fixed
  targets.tips.reserve(model.num_fingers());
  for (const auto& tip : model.fingertips) {
    const Eigen::Vector3d human_tip = keypoints.row(keypoint_tip(static_cast<int>(tip.tag)));
    targets.tips.push_back(wrist + scale * (human_tip - wrist));
  }
  return targets;
}

namespace {

void check_targets(const RobotHandModel& model, const KeypointTargets& targets) {
  if (static_cast<int>(targets.tips.size()) != model.num_fingers()) {
    throw std::invalid_argument("targets: tip count " + std::to_string(targets.tips.size()) +
                                " does not match the hand's " +
                                std::to_string(model.num_fingers()) + " fingers");
  }
  bool finite = targets.palm.allFinite();
  for (const auto& tip : targets.tips) finite = finite && tip.allFinite();
  if (!finite) throw std::invalid_argument("targets: non-finite values");
}

double similarity(const HandFrames& frames, const KeypointTargets& targets,
                  ObjectiveVariant variant) {
  const int n = static_cast<int>(frames.tips.size());
  double value = 0.0;
  switch (variant) {
    case ObjectiveVariant::Position:
      value += (frames.palm - targets.palm).squaredNorm();
      for (int i = 0; i < n; ++i) value += (frames.tips[i] - targets.tips[i]).squaredNorm();
      break;
    case ObjectiveVariant::DexPilot:
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          value += ((frames.tips[i] - frames.tips[j]) - (targets.tips[i] - targets.tips[j]))
                       .squaredNorm();
        }
      }
      [[fallthrough]];  // DexPilot includes the palm-relative sum
    case ObjectiveVariant::Vector:
      for (int i = 0; i < n; ++i) {
        value += ((frames.tips[i] - frames.palm) - (targets.tips[i] - targets.palm))
                     .squaredNorm();
      }
      break;
  }
  return value;
}

}  // namespace

double objective_value(const RobotHandModel& model, const Eigen::VectorXd& q,
                       const KeypointTargets& targets, const RetargetConfig& config,
                       const Eigen::VectorXd& q_prev) {
  check_targets(model, targets);
  const HandFrames frames = fk(model, q);
  return config.target_weight * similarity(frames, targets, config.objective) +
         config.smoothness_weight * (q - q_prev).squaredNorm();
}

Eigen::VectorXd objective_gradient(const RobotHandModel& model, const Eigen::VectorXd& q,
                                   const KeypointTargets& targets, const RetargetConfig& config,
                                   const Eigen::VectorXd& q_prev) {
  check_targets(model, targets);
  const HandFrames frames = fk(model, q);
  const Eigen::MatrixXd jac = jacobian(model, q);
  const int n = model.num_fingers();
  const auto palm_jac = jac.topRows<3>();
  const auto tip_jac = [&](int i) { return jac.middleRows<3>(3 * (i + 1)); };

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.dof());
  switch (config.objective) {
    case ObjectiveVariant::Position:
      grad += 2.0 * palm_jac.transpose() * (frames.palm - targets.palm);
      for (int i = 0; i < n; ++i) {
        grad += 2.0 * tip_jac(i).transpose() * (frames.tips[i] - targets.tips[i]);
      }
      break;
    case ObjectiveVariant::DexPilot:
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const Eigen::Vector3d residual =
              (frames.tips[i] - frames.tips[j]) - (targets.tips[i] - targets.tips[j]);
          const Eigen::VectorXd pair = (tip_jac(i) - tip_jac(j)).transpose() * residual;
          grad += 2.0 * pair;
        }
      }
      [[fallthrough]];
    case ObjectiveVariant::Vector:
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d residual =
            (frames.tips[i] - frames.palm) - (targets.tips[i] - targets.palm);
        grad += 2.0 * (tip_jac(i) - palm_jac).transpose() * residual;
      }
      break;
  }
  grad *= config.target_weight;
  grad += 2.0 * config.smoothness_weight * (q - q_prev);
  return grad;
}

Eigen::VectorXd retarget_step(const RobotHandModel& model, const KeypointTargets& targets,
                              const Eigen::VectorXd& q_prev, const RetargetConfig& config,
                              SolveTrace* trace) {
  config.validate();
  check_targets(model, targets);

  constexpr double kArmijoC = 1e-4;
  constexpr int kMaxHalvings = 60;

  Eigen::VectorXd q = clamp(model, q_prev);
  double value = objective_value(model, q, targets, config, q_prev);
  Eigen::VectorXd grad = objective_gradient(model, q, targets, config, q_prev);
  if (trace) {
    *trace = SolveTrace{};
    trace->objective.push_back(value);
  }

  double bb_step = 1.0;
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    const Eigen::VectorXd projected = q - clamp(model, q - grad);
    if (projected.norm() <= config.gradient_tolerance) break;

    double alpha = bb_step;
    Eigen::VectorXd q_new;
    double value_new = value;
    bool accepted = false;
    for (int halving = 0; halving < kMaxHalvings; ++halving) {
      q_new = clamp(model, q - alpha * grad);
      const Eigen::VectorXd step = q_new - q;
      if (step.norm() <= 1e-18) break;  // projection absorbed the whole step
      value_new = objective_value(model, q_new, targets, config, q_prev);
      if (value_new <= value + kArmijoC * grad.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd step = q_new - q;
    const Eigen::VectorXd grad_new = objective_gradient(model, q_new, targets, config, q_prev);
    const Eigen::VectorXd grad_delta = grad_new - grad;
    const double curvature = step.dot(grad_delta);
    bb_step = (curvature > 1e-16) ? std::clamp(step.squaredNorm() / curvature, 1e-10, 1e10)
                                  : 1.0;
    q = q_new;
    value = value_new;
    grad = grad_new;
    if (trace) trace->objective.push_back(value);
    if (step.norm() <= config.step_tolerance) {
      ++iter;
      break;
    }
  }

  if (trace) {
    trace->iterations = iter;
    trace->final_gradient_norm = (q - clamp(model, q - grad)).norm();
  }
  return q;
}

std::vector<Eigen::VectorXd> retarget_trajectory(const RobotHandModel& model,
                                                 const std::vector<KeypointTargets>& targets,
                                                 const Eigen::VectorXd& q_init,
                                                 const RetargetConfig& config) {
  if (targets.empty()) {
    throw std::invalid_argument("retarget_trajectory: empty target sequence");
  }
  std::vector<Eigen::VectorXd> result;
  result.reserve(targets.size());
  Eigen::VectorXd q = clamp(model, q_init);
  for (const auto& step_targets : targets) {
    q = retarget_step(model, step_targets, q, config);
    result.push_back(q);
  }
  return result;
}

}  // namespace crossdex
