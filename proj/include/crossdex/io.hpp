#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossdex/eigengrasp.hpp"
#include "crossdex/pipeline.hpp"
#include "crossdex/pose_model.hpp"
#include "crossdex/robot_hand.hpp"
#include "crossdex/surrogate.hpp"

namespace crossdex {

inline constexpr std::string_view kPoseMagic = "XDEXPOSE";
inline constexpr std::string_view kMlpMagic = "XDEXMLP1";

/// Pose dataset: binary (magic "XDEXPOSE", u32 LE count, u32 LE dim = 45,
/// count x 45 LE f32) or CSV fallback (45 columns, no header), selected by
/// sniffing the magic. Rows are canonicalized at ingestion.
Eigen::MatrixXd read_pose_dataset(const std::filesystem::path& path);

/// Writes CSV when the extension is .csv, binary otherwise.
void write_pose_dataset(const std::filesystem::path& path, const Eigen::MatrixXd& poses);

EigengraspBasis read_basis(const std::filesystem::path& path);
void write_basis(const std::filesystem::path& path, const EigengraspBasis& basis);

/// Skeleton JSON: `parent` (21 ints), `rest_offset` (21 x 3 meters), `names`
/// (21 strings); the joint mapping follows from the fixed keypoint layout.
HandSkeleton read_skeleton(const std::filesystem::path& path);
void write_skeleton(const std::filesystem::path& path, const HandSkeleton& skeleton);

HandConfig read_hand_config(const std::filesystem::path& path);

/// Reads the config and its URDF (urdf_path resolved relative to the config).
RobotHandModel load_hand(const std::filesystem::path& config_path);

/// Network weights: JSON (layer_dims, per-layer row-major weight/bias,
/// hand_tag, joint_limits) or binary (magic "XDEXMLP1") when the extension is
/// .bin.
MlpParams read_mlp(const std::filesystem::path& path);
void write_mlp(const std::filesystem::path& path, const MlpParams& params);

/// Rollout JSON Lines: per step `palm`, `tips`, `object_center`, `object_xy0`
/// (optional `action` ignored).
std::vector<SceneState> read_rollout(const std::filesystem::path& path);
void write_rollout(const std::filesystem::path& path, const std::vector<SceneState>& scenes);

/// One record of a retarget input stream: eigengrasp weights or raw keypoints.
struct WeightStreamRecord {
  double t = 0.0;
  std::optional<Eigen::VectorXd> weights;
  std::optional<Keypoints> keypoints;
};

std::vector<WeightStreamRecord> read_weight_stream(const std::filesystem::path& path);

/// FNV-1a 64-bit content digests for run manifests.
std::string fnv1a64(std::string_view bytes);
std::string fnv1a64_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace crossdex
