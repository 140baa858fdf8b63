#include "crossdex/robot_hand.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "crossdex/error.hpp"

namespace pt = boost::property_tree;

namespace crossdex {

Finger finger_from_string(const std::string& name) {
  if (name == "thumb") return Finger::Thumb;
  if (name == "index") return Finger::Index;
  if (name == "middle") return Finger::Middle;
  if (name == "ring") return Finger::Ring;
  if (name == "little") return Finger::Little;
  throw FormatError("unknown finger tag \"" + name +
                    "\" (expected thumb/index/middle/ring/little)");
}

const char* to_string(Finger finger) {
  switch (finger) {
    case Finger::Thumb: return "thumb";
    case Finger::Index: return "index";
    case Finger::Middle: return "middle";
    case Finger::Ring: return "ring";
    case Finger::Little: return "little";
  }
  return "?";
}

Eigen::VectorXd RobotHandModel::lower_limits() const {
  Eigen::VectorXd lo(dof());
  for (int i = 0; i < dof(); ++i) lo[i] = joints[actuated_order[i]].lower;
  return lo;
}

Eigen::VectorXd RobotHandModel::upper_limits() const {
  Eigen::VectorXd hi(dof());
  for (int i = 0; i < dof(); ++i) hi[i] = joints[actuated_order[i]].upper;
  return hi;
}

int RobotHandModel::link_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(link_names.size()); ++i) {
    if (link_names[i] == name) return i;
  }
  return -1;
}

namespace {

Eigen::Vector3d parse_vec3(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  Eigen::Vector3d v;
  if (!(is >> v.x() >> v.y() >> v.z())) {
    throw FormatError("urdf: cannot parse \"" + text + "\" as 3 numbers in " + what);
  }
  return v;
}

Eigen::Matrix3d rpy_matrix(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

struct LinkState {
  Eigen::Matrix3d rot;
  Eigen::Vector3d pos;
};

// Per-joint motion values with mimic couplings applied.
std::vector<double> joint_values(const RobotHandModel& model, const Eigen::VectorXd& q) {
  std::vector<double> values(model.joints.size(), 0.0);
  for (int i = 0; i < model.dof(); ++i) values[model.actuated_order[i]] = q[i];
  for (size_t j = 0; j < model.joints.size(); ++j) {
    const Joint& joint = model.joints[j];
    if (joint.mimic_source >= 0) {
      values[j] = joint.mimic_multiplier * values[joint.mimic_source] + joint.mimic_offset;
    }
  }
  return values;
}

std::vector<LinkState> link_states(const RobotHandModel& model, const Eigen::VectorXd& q) {
  const std::vector<double> values = joint_values(model, q);
  std::vector<LinkState> states(model.link_names.size());
  states[model.root_link] = {Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()};
  for (int j : model.joint_topo_order) {
    const Joint& joint = model.joints[j];
    const LinkState& parent = states[joint.parent_link];
    LinkState child;
    child.rot = parent.rot * rpy_matrix(joint.origin_rpy);
    child.pos = parent.pos + parent.rot * joint.origin_xyz;
    if (joint.type == JointType::Revolute) {
      child.rot = child.rot * Eigen::AngleAxisd(values[j], joint.axis).toRotationMatrix();
    } else if (joint.type == JointType::Prismatic) {
      child.pos += child.rot * (joint.axis * values[j]);
    }
    states[joint.child_link] = child;
  }
  return states;
}

void check_dof(const RobotHandModel& model, const Eigen::VectorXd& q, const char* where) {
  if (q.size() != model.dof()) {
    throw std::invalid_argument(std::string(where) + ": expected " +
                                std::to_string(model.dof()) + " joint values, got " +
                                std::to_string(q.size()));
  }
}

}  // namespace

RobotHandModel load_urdf(const std::string& urdf_xml, const HandConfig& config,
                         const std::string& tag) {
  pt::ptree doc;
  try {
    std::istringstream is(urdf_xml);
    pt::read_xml(is, doc);
  } catch (const pt::xml_parser_error& e) {
    throw FormatError(std::string("urdf: malformed XML: ") + e.what());
  }

  auto robot = doc.get_child_optional("robot");
  if (!robot) {
    throw FormatError("urdf: missing <robot> root element");
  }

  RobotHandModel model;
  model.tag = tag;
  model.config_scale = config.scale;
  std::map<std::string, int> link_ids;
  struct PendingMimic {
    int joint;
    std::string source;
    double multiplier;
    double offset;
  };
  std::vector<PendingMimic> mimics;
  std::map<std::string, int> joint_ids;

  for (const auto& [key, node] : *robot) {
    if (key == "link") {
      const std::string name = node.get<std::string>("<xmlattr>.name", "");
      if (name.empty()) throw FormatError("urdf: link without a name");
      if (link_ids.count(name)) throw FormatError("urdf: duplicate link \"" + name + "\"");
      link_ids[name] = static_cast<int>(model.link_names.size());
      model.link_names.push_back(name);
    }
  }

  for (const auto& [key, node] : *robot) {
    if (key != "joint") continue;
    Joint joint;
    joint.name = node.get<std::string>("<xmlattr>.name", "");
    if (joint.name.empty()) throw FormatError("urdf: joint without a name");
    if (joint_ids.count(joint.name)) {
      throw FormatError("urdf: duplicate joint \"" + joint.name + "\"");
    }
    const std::string type = node.get<std::string>("<xmlattr>.type", "");
    if (type == "revolute") {
      joint.type = JointType::Revolute;
    } else if (type == "prismatic") {
      joint.type = JointType::Prismatic;
    } else if (type == "fixed") {
      joint.type = JointType::Fixed;
    } else {
      throw FormatError("urdf: joint \"" + joint.name + "\" has unsupported type \"" + type +
                        "\" (revolute, prismatic, fixed only)");
    }

    const auto parent_name = node.get_optional<std::string>("parent.<xmlattr>.link");
    const auto child_name = node.get_optional<std::string>("child.<xmlattr>.link");
    if (!parent_name || !child_name) {
      throw FormatError("urdf: joint \"" + joint.name + "\" missing parent or child link");
    }
    auto pit = link_ids.find(*parent_name);
    auto cit = link_ids.find(*child_name);
    if (pit == link_ids.end() || cit == link_ids.end()) {
      throw FormatError("urdf: joint \"" + joint.name + "\" references an undeclared link");
    }
    joint.parent_link = pit->second;
    joint.child_link = cit->second;

    if (auto xyz = node.get_optional<std::string>("origin.<xmlattr>.xyz")) {
      joint.origin_xyz = parse_vec3(*xyz, "joint \"" + joint.name + "\" origin xyz");
    }
    if (auto rpy = node.get_optional<std::string>("origin.<xmlattr>.rpy")) {
      joint.origin_rpy = parse_vec3(*rpy, "joint \"" + joint.name + "\" origin rpy");
    }
    if (auto axis = node.get_optional<std::string>("axis.<xmlattr>.xyz")) {
      joint.axis = parse_vec3(*axis, "joint \"" + joint.name + "\" axis");
      const double norm = joint.axis.norm();
      if (norm <= 0.0) throw FormatError("urdf: joint \"" + joint.name + "\" has zero axis");
      joint.axis /= norm;
    }
    if (joint.movable()) {
      const auto lower = node.get_optional<double>("limit.<xmlattr>.lower");
      const auto upper = node.get_optional<double>("limit.<xmlattr>.upper");
      if (!lower || !upper || !std::isfinite(*lower) || !std::isfinite(*upper)) {
        throw FormatError("urdf: movable joint \"" + joint.name + "\" needs finite limits");
      }
      if (*lower > *upper) {
        throw FormatError("urdf: joint \"" + joint.name + "\" has lower > upper");
      }
      joint.lower = *lower;
      joint.upper = *upper;
      if (auto mimic = node.get_child_optional("mimic")) {
        PendingMimic pending;
        pending.joint = static_cast<int>(model.joints.size());
        pending.source = mimic->get<std::string>("<xmlattr>.joint", "");
        pending.multiplier = mimic->get<double>("<xmlattr>.multiplier", 1.0);
        pending.offset = mimic->get<double>("<xmlattr>.offset", 0.0);
        if (pending.source.empty()) {
          throw FormatError("urdf: mimic on joint \"" + joint.name + "\" names no source");
        }
        mimics.push_back(pending);
      }
    }
    joint_ids[joint.name] = static_cast<int>(model.joints.size());
    model.joints.push_back(joint);
  }

  // mimic expansion: couple to an actuated source, no chains
  for (const auto& pending : mimics) {
    auto it = joint_ids.find(pending.source);
    if (it == joint_ids.end()) {
      throw FormatError("urdf: mimic source joint \"" + pending.source + "\" does not exist");
    }
    Joint& mimicking = model.joints[pending.joint];
    const Joint& source = model.joints[it->second];
    if (!source.movable() || source.mimic_source >= 0) {
      throw FormatError("urdf: mimic source \"" + pending.source +
                        "\" must be a movable, non-mimic joint");
    }
    mimicking.mimic_source = it->second;
    mimicking.mimic_multiplier = pending.multiplier;
    mimicking.mimic_offset = pending.offset;
  }

  // tree checks: every link at most one parent joint, exactly one root, all reachable
  model.parent_joint_of_link.assign(model.link_names.size(), -1);
  for (size_t j = 0; j < model.joints.size(); ++j) {
    const int child = model.joints[j].child_link;
    if (model.parent_joint_of_link[child] != -1) {
      throw FormatError("urdf: kinematic loop: link \"" + model.link_names[child] +
                        "\" has more than one parent joint");
    }
    model.parent_joint_of_link[child] = static_cast<int>(j);
  }
  model.root_link = -1;
  for (size_t l = 0; l < model.link_names.size(); ++l) {
    if (model.parent_joint_of_link[l] == -1) {
      if (model.root_link != -1) {
        throw FormatError("urdf: multiple root links (\"" + model.link_names[model.root_link] +
                          "\", \"" + model.link_names[l] + "\")");
      }
      model.root_link = static_cast<int>(l);
    }
  }
  if (model.root_link == -1) {
    throw FormatError("urdf: kinematic loop: no root link");
  }

  std::vector<std::vector<int>> child_joints(model.link_names.size());
  for (size_t j = 0; j < model.joints.size(); ++j) {
    child_joints[model.joints[j].parent_link].push_back(static_cast<int>(j));
  }
  std::deque<int> frontier{model.root_link};
  std::vector<bool> visited(model.link_names.size(), false);
  visited[model.root_link] = true;
  while (!frontier.empty()) {
    const int link = frontier.front();
    frontier.pop_front();
    for (int j : child_joints[link]) {
      model.joint_topo_order.push_back(j);
      const int child = model.joints[j].child_link;
      if (visited[child]) throw FormatError("urdf: kinematic loop through joint \"" +
                                            model.joints[j].name + "\"");
      visited[child] = true;
      frontier.push_back(child);
    }
  }
  if (!std::all_of(visited.begin(), visited.end(), [](bool v) { return v; })) {
    throw FormatError("urdf: kinematic loop: some links are unreachable from the root");
  }

  // actuated order = document order of movable non-mimic joints, unless overridden
  for (size_t j = 0; j < model.joints.size(); ++j) {
    if (model.joints[j].movable() && model.joints[j].mimic_source < 0) {
      model.actuated_order.push_back(static_cast<int>(j));
    }
  }
  if (!config.joint_order_override.empty()) {
    if (config.joint_order_override.size() != model.actuated_order.size()) {
      throw FormatError("hand config: joint_order_override must list all " +
                        std::to_string(model.actuated_order.size()) + " actuated joints");
    }
    std::vector<int> order;
    for (const auto& name : config.joint_order_override) {
      auto it = joint_ids.find(name);
      if (it == joint_ids.end() ||
          std::find(model.actuated_order.begin(), model.actuated_order.end(), it->second) ==
              model.actuated_order.end()) {
        throw FormatError("hand config: joint_order_override names unknown actuated joint \"" +
                          name + "\"");
      }
      if (std::find(order.begin(), order.end(), it->second) != order.end()) {
        throw FormatError("hand config: joint_order_override repeats joint \"" + name + "\"");
      }
      order.push_back(it->second);
    }
    model.actuated_order = order;
  }

  model.palm_link = model.link_index(config.palm_link);
  if (model.palm_link < 0) {
    throw FormatError("hand config: palm link \"" + config.palm_link + "\" not in URDF");
  }
  if (config.fingertips.empty()) {
    throw FormatError("hand config: at least one fingertip required");
  }
  std::vector<bool> tag_used(kNumCanonicalFingers, false);
  for (const auto& [link_name, finger] : config.fingertips) {
    Fingertip tip;
    tip.link = model.link_index(link_name);
    tip.tag = finger;
    if (tip.link < 0) {
      throw FormatError("hand config: fingertip link \"" + link_name + "\" not in URDF");
    }
    if (tag_used[static_cast<int>(finger)]) {
      throw FormatError(std::string("hand config: duplicate finger tag \"") + to_string(finger) +
                        "\"");
    }
    tag_used[static_cast<int>(finger)] = true;
    model.fingertips.push_back(tip);
  }
  if (!config.mount_joint.empty()) {
    auto it = joint_ids.find(config.mount_joint);
    if (it == joint_ids.end()) {
      throw FormatError("hand config: mount joint \"" + config.mount_joint + "\" not in URDF");
    }
    model.mount_joint = it->second;
  }
  return model;
}

Eigen::VectorXd clamp(const RobotHandModel& model, const Eigen::VectorXd& q_raw) {
  check_dof(model, q_raw, "clamp");
  if (!q_raw.allFinite()) {
    throw std::invalid_argument("clamp: non-finite joint values");
  }
  return q_raw.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits());
}

Eigen::VectorXd mid_range_config(const RobotHandModel& model) {
  return 0.5 * (model.lower_limits() + model.upper_limits());
}

HandFrames fk(const RobotHandModel& model, const Eigen::VectorXd& q) {
  check_dof(model, q, "fk");
  const auto states = link_states(model, q);
  HandFrames frames;
  frames.palm = states[model.palm_link].pos;
  frames.tips.reserve(model.fingertips.size());
  for (const auto& tip : model.fingertips) frames.tips.push_back(states[tip.link].pos);
  return frames;
}

Eigen::MatrixXd jacobian(const RobotHandModel& model, const Eigen::VectorXd& q) {
  check_dof(model, q, "jacobian");
  const auto states = link_states(model, q);
  const std::vector<double> values = joint_values(model, q);

  // world-frame axis and origin of every movable joint
  std::vector<Eigen::Vector3d> world_axis(model.joints.size());
  std::vector<Eigen::Vector3d> world_origin(model.joints.size());
  for (size_t j = 0; j < model.joints.size(); ++j) {
    const Joint& joint = model.joints[j];
    if (!joint.movable()) continue;
    const LinkState& parent = states[joint.parent_link];
    const Eigen::Matrix3d frame = parent.rot * rpy_matrix(joint.origin_rpy);
    world_axis[j] = frame * joint.axis;
    world_origin[j] = parent.pos + parent.rot * joint.origin_xyz;
  }

  std::vector<int> column_of_joint(model.joints.size(), -1);
  for (int i = 0; i < model.dof(); ++i) column_of_joint[model.actuated_order[i]] = i;

  const int n_points = model.num_fingers() + 1;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * n_points, model.dof());
  auto fill_point = [&](int row, int link, const Eigen::Vector3d& point) {
    // walk the ancestor chain of the point's link
    for (int j = model.parent_joint_of_link[link]; j != -1;
         j = model.parent_joint_of_link[model.joints[j].parent_link]) {
      const Joint& joint = model.joints[j];
      if (!joint.movable()) continue;
      int column = column_of_joint[j];
      double gain = 1.0;
      if (joint.mimic_source >= 0) {
        column = column_of_joint[joint.mimic_source];
        gain = joint.mimic_multiplier;
      }
      if (column < 0) continue;
      const Eigen::Vector3d contribution =
          (joint.type == JointType::Revolute)
              ? Eigen::Vector3d(world_axis[j].cross(point - world_origin[j]))
              : world_axis[j];
      jac.block<3, 1>(row, column) += gain * contribution;
    }
  };

  fill_point(0, model.palm_link, states[model.palm_link].pos);
  for (int i = 0; i < model.num_fingers(); ++i) {
    const int link = model.fingertips[i].link;
    fill_point(3 * (i + 1), link, states[link].pos);
  }
  return jac;
}

RobotHandModel randomize_mount(const RobotHandModel& model, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) {
    throw std::invalid_argument("randomize_mount: sigma must be >= 0");
  }
  if (model.mount_joint < 0) {
    throw std::invalid_argument("randomize_mount: mount joint not declared in the hand config");
  }
  RobotHandModel copy = model;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d offset;
  for (int i = 0; i < 3; ++i) offset[i] = sigma * gauss(rng);
  copy.joints[model.mount_joint].origin_xyz += offset;
  return copy;
}

}  // namespace crossdex
