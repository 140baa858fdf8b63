#include "crossdex/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace crossdex {

RetargetSession make_session(EigengraspBasis basis, HandSkeleton skeleton, RobotHandModel model,
                             RetargetConfig config, RetargetBackend backend,
                             std::optional<MlpParams> surrogate) {
  basis.validate();
  skeleton.validate();
  config.validate();
  if (backend == RetargetBackend::Surrogate) {
    if (!surrogate) {
      throw std::invalid_argument("session: surrogate backend needs network weights");
    }
    surrogate->validate();
    if (surrogate->output_dim() != model.dof()) {
      throw std::invalid_argument("session: surrogate output dim does not match the hand");
    }
  }
  RetargetSession session{std::move(basis),  std::move(skeleton), std::move(model),
                          config,            backend,             std::move(surrogate),
                          Eigen::VectorXd()};
  session.q_prev = mid_range_config(session.model);
  return session;
}

ActOutput act(RetargetSession& session, const CrossDexAction& action) {
  if (session.q_prev.size() != session.model.dof()) {
    throw std::invalid_argument("act: session not initialized");
  }
  const HandPose theta = synthesize(session.basis, action.weights);

  ActOutput output;
  output.arm_targets = action.arm_targets;
  if (session.backend == RetargetBackend::Oracle) {
    const Keypoints keypoints = hand_keypoints(session.skeleton, theta);
    const KeypointTargets targets =
        map_targets(keypoints, session.model, session.config.scale);
    output.hand_targets = retarget_step(session.model, targets, session.q_prev, session.config);
    session.q_prev = output.hand_targets;
  } else {
    output.hand_targets = predict(*session.surrogate, theta.transpose()).row(0).transpose();
  }
  return output;
}

TaggedFrames tag_frames(const RobotHandModel& model, const HandFrames& frames) {
  if (frames.tips.size() != model.fingertips.size()) {
    throw std::invalid_argument("tag_frames: frame/finger count mismatch");
  }
  TaggedFrames tagged;
  tagged.palm = frames.palm;
  tagged.tips.reserve(frames.tips.size());
  for (size_t i = 0; i < frames.tips.size(); ++i) {
    tagged.tips.emplace_back(model.fingertips[i].tag, frames.tips[i]);
  }
  return tagged;
}

int observation_dim(int k) { return kArmDof + 3 * (kNumCanonicalFingers + 1) + 7 + kArmDof + k; }

Eigen::VectorXd build_observation(const Eigen::Matrix<double, kArmDof, 1>& arm_joints,
                                  const TaggedFrames& frames,
                                  const Eigen::Matrix<double, 7, 1>& object_pose,
                                  const Eigen::VectorXd& prev_action) {
  if (prev_action.size() < kArmDof + 1) {
    throw std::invalid_argument("observation: prev_action must hold 6 arm values plus weights");
  }
  if (!arm_joints.allFinite() || !object_pose.allFinite() || !prev_action.allFinite() ||
      !frames.palm.allFinite()) {
    throw std::invalid_argument("observation: non-finite inputs");
  }

  Eigen::Matrix<double, 7, 1> pose = object_pose;
  const double quat_norm = pose.tail<4>().norm();
  if (std::abs(quat_norm - 1.0) > 1e-6) {
    throw std::invalid_argument("observation: object quaternion must be unit within 1e-6");
  }
  pose.tail<4>() /= quat_norm;

  // canonical slots [palm, thumb, index, middle, ring, little]; absent fingers
  // take the palm position so padded coordinates stay inside the workspace
  Eigen::Matrix<double, 3 * (kNumCanonicalFingers + 1), 1> slots;
  for (int s = 0; s <= kNumCanonicalFingers; ++s) slots.segment<3>(3 * s) = frames.palm;
  std::array<bool, kNumCanonicalFingers> seen{};
  for (const auto& [finger, position] : frames.tips) {
    const int slot = static_cast<int>(finger);
    if (seen[slot]) {
      throw std::invalid_argument(std::string("observation: duplicate finger tag \"") +
                                  to_string(finger) + "\"");
    }
    seen[slot] = true;
    slots.segment<3>(3 * (slot + 1)) = position;
  }

  const int k = static_cast<int>(prev_action.size()) - kArmDof;
  Eigen::VectorXd obs(observation_dim(k));
  obs.head<kArmDof>() = arm_joints;
  obs.segment<3 * (kNumCanonicalFingers + 1)>(kArmDof) = slots;
  obs.segment<7>(kArmDof + 3 * (kNumCanonicalFingers + 1)) = pose;
  obs.tail(prev_action.size()) = prev_action;
  return obs;
}

double SceneState::mean_tip_distance() const {
  double sum = 0.0;
  for (const auto& tip : tips) sum += (tip - object_center).norm();
  return sum / static_cast<double>(tips.size());
}

double SceneState::palm_distance() const { return (palm - object_center).norm(); }

void SceneState::validate() const {
  if (tips.empty()) throw std::invalid_argument("scene: at least one fingertip required");
  bool finite = palm.allFinite() && object_center.allFinite() && object_initial_xy.allFinite();
  for (const auto& tip : tips) finite = finite && tip.allFinite();
  if (!finite) throw std::invalid_argument("scene: non-finite values");
}

RewardComponents reward_components(const SceneState& scene) {
  scene.validate();
  const double tip_distance = scene.mean_tip_distance();
  const double palm_distance = scene.palm_distance();

  RewardComponents reward;
  reward.r_dis = -2.0 * tip_distance - palm_distance;

  if (tip_distance >= kTipDistanceThreshold && palm_distance >= kPalmDistanceThreshold) {
    reward.r_height = 0.0;
  } else {
    const double d = scene.height() - kLiftTargetHeight;
    reward.r_height = 0.9 - 2.0 * std::abs(d) + d + 1.0 / (std::abs(d) + 1.0);
  }

  reward.r_xy =
      -0.3 * (scene.object_center.head<2>() - scene.object_initial_xy).norm();
  return reward;
}

SuccessUpdate success_update(SuccessTracker& tracker, const SceneState& scene) {
  if (tracker.done) {
    throw std::invalid_argument("success_update: tracker already done");
  }
  scene.validate();
  const bool at_height = std::abs(scene.height() - kLiftTargetHeight) <= kHeightTolerance;
  const bool hand_close = scene.mean_tip_distance() <= kTipDistanceThreshold ||
                          scene.palm_distance() <= kPalmDistanceThreshold;

  SuccessUpdate update;
  if (at_height && hand_close) {
    ++tracker.counter;
    if (tracker.counter >= tracker.required_steps) {
      tracker.done = true;
      update.reward_bonus = kSuccessBonus;
      update.done = true;
    }
  } else {
    tracker.counter = 0;
  }
  return update;
}

int required_steps_for(ScoreMode mode) { return mode == ScoreMode::Test ? 30 : 60; }

RolloutScore score_rollout(const std::vector<SceneState>& trajectory, ScoreMode mode) {
  if (trajectory.empty()) {
    throw std::invalid_argument("score_rollout: empty trajectory");
  }
  SuccessTracker tracker{required_steps_for(mode)};
  RolloutScore score;
  for (const auto& scene : trajectory) {
    if (scene.height() < 0.0) break;  // fell off the table: episode over, no bonus
    ++score.steps;
    score.total_reward += reward_components(scene).total();
    const SuccessUpdate update = success_update(tracker, scene);
    score.total_reward += update.reward_bonus;
    if (update.done) {
      score.success = true;
      break;
    }
  }
  return score;
}

SceneState kinematic_step(const SceneState& previous, const Eigen::Vector3d& palm,
                          const std::vector<Eigen::Vector3d>& tips) {
  previous.validate();
  SceneState next = previous;
  next.palm = palm;
  next.tips = tips;
  if (previous.mean_tip_distance() < kAttachRadius) {
    next.object_center += palm - previous.palm;
  }
  return next;
}

}  // namespace crossdex
