#pragma once

#include <Eigen/Core>
#include <array>
#include <string>

namespace crossdex {

inline constexpr int kPoseDim = 45;        // 15 finger joints x 3 axis-angle coordinates
inline constexpr int kNumFingerJoints = 15;
inline constexpr int kNumKeypoints = 21;   // wrist + 5 fingers x (MCP, PIP, DIP, TIP)
inline constexpr int kNumFingers = 5;

/// 45 axis-angle coordinates of the finger joints, ordered thumb->little and
/// proximal->distal within each finger (wrist rotation and shape are held at zero).
using HandPose = Eigen::Matrix<double, kPoseDim, 1>;

/// 21 keypoint positions in meters, wrist frame, one row per keypoint.
using Keypoints = Eigen::Matrix<double, kNumKeypoints, 3>;

/// Rigid 21-keypoint hand skeleton. Keypoint 0 is the wrist; each finger then
/// contributes MCP, PIP, DIP, TIP. joint_of_keypoint[i] names the pose joint that
/// rotates the bone leading to keypoint i; the wrist and the fingertips carry -1
/// (a fingertip is a pure offset in its DIP frame).
struct HandSkeleton {
  std::array<int, kNumKeypoints> parent;
  std::array<Eigen::Vector3d, kNumKeypoints> rest_offset;  // meters, parent frame at zero pose
  std::array<int, kNumKeypoints> joint_of_keypoint;
  std::array<std::string, kNumKeypoints> names;

  /// Throws std::invalid_argument when the tree or layout invariants are broken.
  void validate() const;
};

/// Average adult hand, bundled as data/skeleton_default.json with identical values.
HandSkeleton default_skeleton();

/// Exponential map: axis-angle (rotation vector) to rotation matrix.
/// The zero vector maps to the identity.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

/// Wraps every 3-coordinate axis-angle block onto the equivalent rotation with
/// norm <= pi. Throws std::invalid_argument on non-finite input.
HandPose canonicalize(const HandPose& pose);

/// Keypoint index helpers for the fixed layout.
inline constexpr int keypoint_mcp(int finger) { return 4 * finger + 1; }
inline constexpr int keypoint_tip(int finger) { return 4 * finger + 4; }

/// Forward kinematics of the skeleton: keypoint 0 at the origin, every other
/// keypoint at parent + (rotation accumulated along its chain) * rest_offset.
Keypoints hand_keypoints(const HandSkeleton& skeleton, const HandPose& pose);

}  // namespace crossdex
