#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "crossdex/pose_model.hpp"
#include "crossdex/retarget.hpp"
#include "crossdex/robot_hand.hpp"

namespace crossdex {

/// Feed-forward retargeting network: affine layers with rectifier activations on
/// the hidden layers, identity output, and a final clamp onto the joint limits.
struct MlpParams {
  std::vector<int> layer_dims;              // e.g. {45, 512, 512, 512, m}
  std::vector<Eigen::MatrixXd> weights;     // weights[l]: dims[l] x dims[l+1]
  std::vector<Eigen::VectorXd> biases;      // biases[l]: dims[l+1]
  Eigen::VectorXd clamp_lower;              // output clamp = joint limits
  Eigen::VectorXd clamp_upper;
  std::string hand_tag;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  void validate() const;  // throws std::invalid_argument
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Optimizer-labeled pose pairs for one hand. limit_lower/upper carry the
/// hand's joint box so training can build the output clamp from the dataset.
struct RetargetDataset {
  Eigen::MatrixXd inputs;  // N x 45
  Eigen::MatrixXd labels;  // N x m, feasible by construction
  Eigen::VectorXd limit_lower;
  Eigen::VectorXd limit_upper;
  std::string hand_tag;
};

struct TrainRecipe {
  int epochs = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 256;
  double validation_fraction = 0.1;
  std::vector<int> hidden_dims = {512, 512, 512};

  void validate() const;
};

struct TrainResult {
  MlpParams params;
  std::vector<double> train_loss;  // epoch means, index 0 = epoch 1
  std::vector<double> val_loss;
};

MlpParams init_mlp(const std::vector<int>& layer_dims, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, const std::string& hand_tag,
                   std::uint64_t seed);

/// Forward pass; output rows clamped to the joint limits.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& batch);

/// Mean squared error over all output elements.
double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& batch,
                const Eigen::MatrixXd& labels);

/// Reverse-mode gradients of mlp_loss; the clamp is treated as identity inside
/// its active region.
MlpGradients mlp_backward(const MlpParams& params, const Eigen::MatrixXd& batch,
                          const Eigen::MatrixXd& labels);

/// Labels every pose with the solver: keypoints -> targets -> one retarget_step
/// from the mid-range warm start with the smoothness term off. Rows are
/// independent, so jobs > 1 splits them across threads with identical output.
RetargetDataset generate_training_set(const RobotHandModel& model, const HandSkeleton& skeleton,
                                      const Eigen::MatrixXd& poses, const RetargetConfig& config,
                                      int jobs = 1);

/// Adam over shuffled minibatches; deterministic per seed. Throws NumericalError
/// (with the epoch index) when the loss turns non-finite.
TrainResult train(const RetargetDataset& dataset, const TrainRecipe& recipe, std::uint64_t seed);

/// Batched inference; rows independent, jobs > 1 splits them across threads.
Eigen::MatrixXd predict(const MlpParams& params, const Eigen::MatrixXd& theta_batch,
                        int jobs = 1);

}  // namespace crossdex
