#include "crossdex/pose_model.hpp"

#include <cmath>
#include <stdexcept>

namespace crossdex {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

const char* const kFingerNames[kNumFingers] = {"thumb", "index", "middle", "ring", "little"};
const char* const kSegmentNames[4] = {"mcp", "pip", "dip", "tip"};

}  // namespace

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
  if (!axis_angle.allFinite()) {
    throw std::invalid_argument("rodrigues: non-finite axis-angle");
  }
  const double theta = axis_angle.norm();
  const Eigen::Matrix3d k = skew(axis_angle);
  if (theta < 1e-8) {
    // second-order expansion, exact to machine precision at this magnitude
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + s * k + c * k * k;
}

HandPose canonicalize(const HandPose& pose) {
  if (!pose.allFinite()) {
    throw std::invalid_argument("canonicalize: non-finite pose");
  }
  HandPose out = pose;
  constexpr double kTwoPi = 2.0 * M_PI;
  for (int j = 0; j < kNumFingerJoints; ++j) {
    Eigen::Vector3d block = out.segment<3>(3 * j);
    const double theta = block.norm();
    if (theta <= M_PI) continue;
    double wrapped = std::fmod(theta, kTwoPi);
    if (wrapped > M_PI) wrapped -= kTwoPi;
    out.segment<3>(3 * j) = block * (wrapped / theta);
  }
  return out;
}

void HandSkeleton::validate() const {
  if (parent[0] != -1) {
    throw std::invalid_argument("skeleton: keypoint 0 must be the root");
  }
  if (joint_of_keypoint[0] != -1) {
    throw std::invalid_argument("skeleton: the wrist carries no joint");
  }
  for (int f = 0; f < kNumFingers; ++f) {
    const int mcp = keypoint_mcp(f);
    for (int b = 0; b < 4; ++b) {
      const int i = mcp + b;
      const int expected_parent = (b == 0) ? 0 : i - 1;
      if (parent[i] != expected_parent) {
        throw std::invalid_argument("skeleton: keypoint " + std::to_string(i) +
                                    " breaks the wrist/MCP/PIP/DIP/TIP chain layout");
      }
      const int expected_joint = (b == 3) ? -1 : 3 * f + b;
      if (joint_of_keypoint[i] != expected_joint) {
        throw std::invalid_argument("skeleton: keypoint " + std::to_string(i) +
                                    " maps to the wrong pose joint");
      }
      if (!rest_offset[i].allFinite() || rest_offset[i].norm() <= 0.0) {
        throw std::invalid_argument("skeleton: bone length of keypoint " + std::to_string(i) +
                                    " must be positive");
      }
    }
  }
}

HandSkeleton default_skeleton() {
  // Average adult hand, bones in the palm plane, fingers fanning out from the
  // wrist (thumb -55 deg ... little +19 deg). Values match data/skeleton_default.json.
  static const double kOffsets[kNumKeypoints][3] = {
      {0.0, 0.0, 0.0},
      {0.025810939635797076, -0.03686184199300463, 0.0},
      {0.021795904581339752, -0.031127777682981687, 0.0},
      {0.018354445963233476, -0.026212865417247738, 0.0},
      {0.015486563781478247, -0.022117105195802778, 0.0},
      {0.09110466232422447, -0.01280392528832602, 0.0},
      {0.04159125888714596, -0.005845270240322749, 0.0},
      {0.024756701718539262, -0.0034793275240016363, 0.0},
      {0.019805361374831406, -0.002783462019201309, 0.0},
      {0.09, 0.0, 0.0},
      {0.046, 0.0, 0.0},
      {0.028, 0.0, 0.0},
      {0.021, 0.0, 0.0},
      {0.08417278584303349, 0.011829713581605563, 0.0},
      {0.04159125888714596, 0.005845270240322749, 0.0},
      {0.0267372378560224, 0.0037576737259217667, 0.0},
      {0.019805361374831406, 0.002783462019201309, 0.0},
      {0.07375044889674671, 0.02539431604765822, 0.0},
      {0.03120211299477746, 0.010743749097086171, 0.0},
      {0.018910371511986337, 0.006511363089143134, 0.0},
      {0.016073815785188388, 0.005534658625771664, 0.0},
  };

  HandSkeleton s;
  s.parent[0] = -1;
  s.joint_of_keypoint[0] = -1;
  s.names[0] = "wrist";
  s.rest_offset[0] = Eigen::Vector3d::Zero();
  for (int f = 0; f < kNumFingers; ++f) {
    for (int b = 0; b < 4; ++b) {
      const int i = keypoint_mcp(f) + b;
      s.parent[i] = (b == 0) ? 0 : i - 1;
      s.joint_of_keypoint[i] = (b == 3) ? -1 : 3 * f + b;
      s.names[i] = std::string(kFingerNames[f]) + "_" + kSegmentNames[b];
      s.rest_offset[i] = Eigen::Vector3d(kOffsets[i][0], kOffsets[i][1], kOffsets[i][2]);
    }
  }
  return s;
}

Keypoints hand_keypoints(const HandSkeleton& skeleton, const HandPose& pose) {
  if (!pose.allFinite()) {
    throw std::invalid_argument("hand_keypoints: non-finite pose");
  }
  std::array<Eigen::Matrix3d, kNumKeypoints> rot;
  Keypoints points;
  rot[0] = Eigen::Matrix3d::Identity();
  points.row(0).setZero();
  for (int i = 1; i < kNumKeypoints; ++i) {
    const int p = skeleton.parent[i];
    const int j = skeleton.joint_of_keypoint[i];
    rot[i] = (j >= 0) ? (rot[p] * rodrigues(pose.segment<3>(3 * j))).eval() : rot[p];
    points.row(i) = points.row(p) + (rot[i] * skeleton.rest_offset[i]).transpose();
  }
  return points;
}

}  // namespace crossdex
