#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace crossdex {

enum class JointType { Revolute, Prismatic, Fixed };

enum class Finger { Thumb = 0, Index, Middle, Ring, Little };
inline constexpr int kNumCanonicalFingers = 5;

Finger finger_from_string(const std::string& name);
const char* to_string(Finger finger);

struct Joint {
  std::string name;
  JointType type = JointType::Fixed;
  int parent_link = -1;
  int child_link = -1;
  Eigen::Vector3d origin_xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d origin_rpy = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();  // joint frame
  double lower = 0.0;
  double upper = 0.0;
  // mimic coupling expanded at load: value = mimic_multiplier * q[mimic_source] + mimic_offset
  int mimic_source = -1;
  double mimic_multiplier = 1.0;
  double mimic_offset = 0.0;

  bool movable() const { return type != JointType::Fixed; }
};

struct Fingertip {
  int link = -1;
  Finger tag = Finger::Thumb;
};

/// Declares how a URDF maps onto the hand abstraction: which frame is the palm,
/// which links are fingertips (with canonical tags), and which joint mounts the
/// hand on the arm flange.
struct HandConfig {
  std::string urdf_path;  // resolved relative to the config file by load_hand
  std::string palm_link;
  std::vector<std::pair<std::string, Finger>> fingertips;
  std::string mount_joint;                       // optional
  double scale = 0.0;                            // 0 = compute from geometry at load
  std::vector<std::string> joint_order_override;  // optional, permutes actuated joints
};

/// Parsed kinematic tree of a dexterous hand. Immutable after load; all
/// kinematics functions are pure.
struct RobotHandModel {
  std::vector<std::string> link_names;
  std::vector<Joint> joints;
  std::vector<int> joint_topo_order;  // root-first traversal order
  std::vector<int> actuated_order;    // movable, non-mimic joints; defines q layout
  std::vector<int> parent_joint_of_link;
  int root_link = -1;
  int palm_link = -1;
  std::vector<Fingertip> fingertips;
  int mount_joint = -1;
  double config_scale = 0.0;
  std::string tag;

  int dof() const { return static_cast<int>(actuated_order.size()); }
  int num_fingers() const { return static_cast<int>(fingertips.size()); }
  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  int link_index(const std::string& name) const;  // -1 when absent
};

/// Palm and fingertip positions in the hand base frame, tips ordered as
/// model.fingertips.
struct HandFrames {
  Eigen::Vector3d palm = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> tips;
};

/// Parses a URDF document against a hand config. Supports revolute, prismatic,
/// fixed, and mimic-coupled joints; rejects continuous/floating/planar and any
/// non-tree structure with FormatError.
RobotHandModel load_urdf(const std::string& urdf_xml, const HandConfig& config,
                         const std::string& tag = "");

/// Coordinate-wise projection of q onto the joint limits.
Eigen::VectorXd clamp(const RobotHandModel& model, const Eigen::VectorXd& q_raw);

/// (lower + upper) / 2 — the deterministic interior warm start.
Eigen::VectorXd mid_range_config(const RobotHandModel& model);

/// Forward kinematics of the palm and fingertip frames.
HandFrames fk(const RobotHandModel& model, const Eigen::VectorXd& q);

/// Geometric point Jacobian, 3*(n+1) x m, row blocks [palm, tips...] in fk order.
Eigen::MatrixXd jacobian(const RobotHandModel& model, const Eigen::VectorXd& q);

/// Copy of the model with the mount-joint origin translated by an i.i.d.
/// Gaussian 3-vector of standard deviation sigma. Deterministic per seed.
RobotHandModel randomize_mount(const RobotHandModel& model, double sigma, std::uint64_t seed);

}  // namespace crossdex
