#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "crossdex/eigengrasp.hpp"
#include "crossdex/pose_model.hpp"
#include "crossdex/retarget.hpp"
#include "crossdex/robot_hand.hpp"
#include "crossdex/surrogate.hpp"

namespace crossdex {

inline constexpr int kArmDof = 6;
inline constexpr double kInitialHeight = 0.3;
inline constexpr double kLiftTargetHeight = 0.6;
inline constexpr double kHeightTolerance = 0.05;
inline constexpr double kTipDistanceThreshold = 0.12;
inline constexpr double kPalmDistanceThreshold = 0.15;
inline constexpr double kSuccessBonus = 200.0;
inline constexpr double kAttachRadius = 0.08;

/// Policy output: 6 arm joint targets plus k eigengrasp weights.
struct CrossDexAction {
  Eigen::Matrix<double, kArmDof, 1> arm_targets;
  Eigen::VectorXd weights;
};

enum class RetargetBackend { Oracle, Surrogate };

/// Per-hand streaming state. The oracle backend owns the warm start across
/// steps; the surrogate backend is stateless. Independent sessions may run
/// concurrently; a single session is not thread-safe.
struct RetargetSession {
  EigengraspBasis basis;
  HandSkeleton skeleton;
  RobotHandModel model;
  RetargetConfig config;
  RetargetBackend backend = RetargetBackend::Oracle;
  std::optional<MlpParams> surrogate;
  Eigen::VectorXd q_prev;  // oracle warm start, mid-range at start
};

RetargetSession make_session(EigengraspBasis basis, HandSkeleton skeleton, RobotHandModel model,
                             RetargetConfig config, RetargetBackend backend,
                             std::optional<MlpParams> surrogate = std::nullopt);

struct ActOutput {
  Eigen::Matrix<double, kArmDof, 1> arm_targets;  // pass-through
  Eigen::VectorXd hand_targets;                   // m joint targets, feasible
};

/// theta = synthesize(w); hand targets via the session backend. Oracle updates
/// the warm start; arm targets pass through untouched.
ActOutput act(RetargetSession& session, const CrossDexAction& action);

/// Fingertip positions labeled with their canonical finger.
struct TaggedFrames {
  Eigen::Vector3d palm = Eigen::Vector3d::Zero();
  std::vector<std::pair<Finger, Eigen::Vector3d>> tips;
};

TaggedFrames tag_frames(const RobotHandModel& model, const HandFrames& frames);

/// Observation layout: arm joints (6), canonical hand frames (18 = [palm,
/// thumb..little] x 3, absent fingers padded with the palm position), object
/// pose (7, position + unit quaternion xyzw), previous action (6 + k).
int observation_dim(int k);
Eigen::VectorXd build_observation(const Eigen::Matrix<double, kArmDof, 1>& arm_joints,
                                  const TaggedFrames& frames,
                                  const Eigen::Matrix<double, 7, 1>& object_pose,
                                  const Eigen::VectorXd& prev_action);

/// One timestep of palm/fingertip/object geometry consumed by the reward.
struct SceneState {
  Eigen::Vector3d palm = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> tips;
  Eigen::Vector3d object_center = Eigen::Vector3d::Zero();
  Eigen::Vector2d object_initial_xy = Eigen::Vector2d::Zero();

  double height() const { return object_center.z(); }
  double mean_tip_distance() const;  // A
  double palm_distance() const;      // P
  void validate() const;
};

struct RewardComponents {
  double r_dis = 0.0;
  double r_height = 0.0;
  double r_xy = 0.0;
  double total() const { return r_dis + r_height + r_xy; }
};

RewardComponents reward_components(const SceneState& scene);

/// Counts consecutive qualifying steps toward the completion bonus.
struct SuccessTracker {
  int required_steps = 30;
  int counter = 0;
  bool done = false;
};

struct SuccessUpdate {
  double reward_bonus = 0.0;
  bool done = false;
};

/// Qualifying step: |H - 0.6| <= 0.05 and (A <= 0.12 or P <= 0.15). The counter
/// resets on a non-qualifying step; reaching required_steps pays the bonus once.
SuccessUpdate success_update(SuccessTracker& tracker, const SceneState& scene);

enum class ScoreMode { Train, Test };
int required_steps_for(ScoreMode mode);  // 30 in test, 60 in train

struct RolloutScore {
  double total_reward = 0.0;
  bool success = false;
  int steps = 0;
};

/// Sums per-step rewards plus at most one success bonus; stops at completion.
/// A scene with object height < 0 (fell off the table) ends the episode
/// immediately and contributes nothing.
RolloutScore score_rollout(const std::vector<SceneState>& trajectory, ScoreMode mode);

/// Kinematic attach harness for scripting synthetic rollouts: the object moves
/// rigidly with the palm while the previous mean fingertip distance is below
/// kAttachRadius, otherwise it stays put. A test fixture, not a physics model.
SceneState kinematic_step(const SceneState& previous, const Eigen::Vector3d& palm,
                          const std::vector<Eigen::Vector3d>& tips);

}  // namespace crossdex
