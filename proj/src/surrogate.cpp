#include "crossdex/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "crossdex/error.hpp"

namespace crossdex {

void MlpParams::validate() const {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("mlp: need at least input and output dims");
  }
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw std::invalid_argument("mlp: layer count mismatch");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l] || weights[l].cols() != layer_dims[l + 1] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw std::invalid_argument("mlp: layer " + std::to_string(l) + " has wrong shape");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw std::invalid_argument("mlp: non-finite parameters in layer " + std::to_string(l));
    }
  }
  if (clamp_lower.size() != layer_dims.back() || clamp_upper.size() != layer_dims.back()) {
    throw std::invalid_argument("mlp: clamp bounds must match the output dim");
  }
}

void TrainRecipe::validate() const {
  if (epochs < 1) throw std::invalid_argument("recipe: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("recipe: batch_size must be >= 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("recipe: learning_rate must be > 0");
  if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("recipe: validation_fraction must lie in (0, 1)");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("recipe: hidden dims must be >= 1");
  }
}

MlpParams init_mlp(const std::vector<int>& layer_dims, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, const std::string& hand_tag,
                   std::uint64_t seed) {
  MlpParams params;
  params.layer_dims = layer_dims;
  params.clamp_lower = lower;
  params.clamp_upper = upper;
  params.hand_tag = hand_tag;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const double stddev = std::sqrt(2.0 / layer_dims[l]);
    Eigen::MatrixXd w(layer_dims[l], layer_dims[l + 1]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = stddev * gauss(rng);
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(layer_dims[l + 1]));
  }
  params.validate();
  return params;
}

namespace {

void check_batch(const MlpParams& params, const Eigen::MatrixXd& batch) {
  if (batch.cols() != params.input_dim()) {
    throw std::invalid_argument("mlp: batch has " + std::to_string(batch.cols()) +
                                " columns, expected " + std::to_string(params.input_dim()));
  }
}

// Pre-clamp forward pass, optionally keeping the hidden activations.
Eigen::MatrixXd forward_raw(const MlpParams& params, const Eigen::MatrixXd& batch,
                            std::vector<Eigen::MatrixXd>* activations) {
  Eigen::MatrixXd x = batch;
  if (activations) activations->push_back(x);
  const size_t last = params.weights.size() - 1;
  for (size_t l = 0; l < params.weights.size(); ++l) {
    x = (x * params.weights[l]).rowwise() + params.biases[l].transpose();
    if (l != last) x = x.cwiseMax(0.0);
    if (activations && l != last) activations->push_back(x);
  }
  return x;
}

Eigen::MatrixXd apply_clamp(const MlpParams& params, const Eigen::MatrixXd& y) {
  return y.cwiseMax(params.clamp_lower.transpose().replicate(y.rows(), 1))
      .cwiseMin(params.clamp_upper.transpose().replicate(y.rows(), 1));
}

}  // namespace

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& batch) {
  params.validate();
  check_batch(params, batch);
  return apply_clamp(params, forward_raw(params, batch, nullptr));
}

double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& batch,
                const Eigen::MatrixXd& labels) {
  if (labels.rows() != batch.rows() || labels.cols() != params.output_dim()) {
    throw std::invalid_argument("mlp: labels shape mismatch");
  }
  const Eigen::MatrixXd out = mlp_forward(params, batch);
  return (out - labels).squaredNorm() / static_cast<double>(out.size());
}

MlpGradients mlp_backward(const MlpParams& params, const Eigen::MatrixXd& batch,
                          const Eigen::MatrixXd& labels) {
  params.validate();
  check_batch(params, batch);
  if (labels.rows() != batch.rows() || labels.cols() != params.output_dim()) {
    throw std::invalid_argument("mlp: labels shape mismatch");
  }

  std::vector<Eigen::MatrixXd> activations;  // inputs of each layer
  const Eigen::MatrixXd raw = forward_raw(params, batch, &activations);
  const Eigen::MatrixXd out = apply_clamp(params, raw);

  // d(MSE)/d(raw): clamp passes gradient only inside its active region
  const double scale = 2.0 / static_cast<double>(out.size());
  Eigen::MatrixXd delta = scale * (out - labels);
  const Eigen::MatrixXd lower = params.clamp_lower.transpose().replicate(raw.rows(), 1);
  const Eigen::MatrixXd upper = params.clamp_upper.transpose().replicate(raw.rows(), 1);
  const Eigen::ArrayXXd active =
      ((raw.array() >= lower.array()) && (raw.array() <= upper.array())).cast<double>();
  delta.array() *= active;

  MlpGradients grads;
  grads.weights.resize(params.weights.size());
  grads.biases.resize(params.weights.size());
  for (int l = static_cast<int>(params.weights.size()) - 1; l >= 0; --l) {
    grads.weights[l] = activations[l].transpose() * delta;
    grads.biases[l] = delta.colwise().sum();
    if (l > 0) {
      delta = delta * params.weights[l].transpose();
      delta.array() *= (activations[l].array() > 0.0).cast<double>();
    }
  }
  return grads;
}

RetargetDataset generate_training_set(const RobotHandModel& model, const HandSkeleton& skeleton,
                                      const Eigen::MatrixXd& poses, const RetargetConfig& config,
                                      int jobs) {
  if (poses.rows() < 1) {
    throw std::invalid_argument("generate_training_set: empty pose set");
  }
  if (poses.cols() != kPoseDim) {
    throw std::invalid_argument("generate_training_set: poses must have 45 columns");
  }
  RetargetConfig label_config = config;
  label_config.smoothness_weight = 0.0;  // labels are a pure function of the pose
  label_config.validate();

  RetargetDataset dataset;
  dataset.inputs = poses;
  dataset.labels.resize(poses.rows(), model.dof());
  dataset.limit_lower = model.lower_limits();
  dataset.limit_upper = model.upper_limits();
  dataset.hand_tag = model.tag;

  const Eigen::VectorXd warm_start = mid_range_config(model);
  auto label_rows = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      const HandPose pose = poses.row(i).transpose();
      const Keypoints keypoints = hand_keypoints(skeleton, pose);
      const KeypointTargets targets = map_targets(keypoints, model, label_config.scale);
      dataset.labels.row(i) =
          retarget_step(model, targets, warm_start, label_config).transpose();
    }
  };

  const int workers = std::max(1, jobs);
  if (workers == 1 || poses.rows() < 2 * workers) {
    label_rows(0, poses.rows());
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (poses.rows() + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const Eigen::Index begin = w * chunk;
      const Eigen::Index end = std::min<Eigen::Index>(begin + chunk, poses.rows());
      if (begin >= end) break;
      pool.emplace_back(label_rows, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return dataset;
}

TrainResult train(const RetargetDataset& dataset, const TrainRecipe& recipe,
                  std::uint64_t seed) {
  recipe.validate();
  const Eigen::Index n = dataset.inputs.rows();
  if (n < 1 || dataset.labels.rows() != n) {
    throw std::invalid_argument("train: dataset empty or inputs/labels length mismatch");
  }

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  const Eigen::Index n_val =
      std::min<Eigen::Index>(n - 1, std::max<Eigen::Index>(1, std::llround(n * recipe.validation_fraction)));
  const Eigen::Index n_train = n - n_val;
  if (n_train < 1) throw std::invalid_argument("train: no training rows after the split");

  const int m = static_cast<int>(dataset.labels.cols());
  Eigen::MatrixXd val_x(n_val, dataset.inputs.cols()), val_y(n_val, m);
  for (Eigen::Index i = 0; i < n_val; ++i) {
    val_x.row(i) = dataset.inputs.row(perm[i]);
    val_y.row(i) = dataset.labels.row(perm[i]);
  }
  std::vector<Eigen::Index> train_idx(perm.begin() + n_val, perm.end());

  std::vector<int> dims;
  dims.push_back(static_cast<int>(dataset.inputs.cols()));
  dims.insert(dims.end(), recipe.hidden_dims.begin(), recipe.hidden_dims.end());
  dims.push_back(m);
  TrainResult result;
  result.params =
      init_mlp(dims, dataset.limit_lower, dataset.limit_upper, dataset.hand_tag, rng());

  std::vector<Eigen::MatrixXd> adam_mw, adam_vw;
  std::vector<Eigen::VectorXd> adam_mb, adam_vb;
  for (size_t l = 0; l < result.params.weights.size(); ++l) {
    adam_mw.push_back(Eigen::MatrixXd::Zero(result.params.weights[l].rows(),
                                            result.params.weights[l].cols()));
    adam_vw.push_back(adam_mw.back());
    adam_mb.push_back(Eigen::VectorXd::Zero(result.params.biases[l].size()));
    adam_vb.push_back(adam_mb.back());
  }

  long step = 0;
  for (int epoch = 1; epoch <= recipe.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    Eigen::Index seen = 0;
    for (Eigen::Index start = 0; start < n_train; start += recipe.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(recipe.batch_size, n_train - start);
      Eigen::MatrixXd bx(b, dataset.inputs.cols()), by(b, m);
      for (Eigen::Index i = 0; i < b; ++i) {
        bx.row(i) = dataset.inputs.row(train_idx[start + i]);
        by.row(i) = dataset.labels.row(train_idx[start + i]);
      }
      epoch_loss += mlp_loss(result.params, bx, by) * static_cast<double>(b);
      seen += b;

      const MlpGradients grads = mlp_backward(result.params, bx, by);
      ++step;
      const double bias1 = 1.0 - std::pow(recipe.beta1, step);
      const double bias2 = 1.0 - std::pow(recipe.beta2, step);
      for (size_t l = 0; l < result.params.weights.size(); ++l) {
        adam_mw[l] = recipe.beta1 * adam_mw[l] + (1.0 - recipe.beta1) * grads.weights[l];
        adam_vw[l] = recipe.beta2 * adam_vw[l] +
                     (1.0 - recipe.beta2) * grads.weights[l].array().square().matrix();
        result.params.weights[l].array() -=
            recipe.learning_rate * (adam_mw[l].array() / bias1) /
            ((adam_vw[l].array() / bias2).sqrt() + recipe.epsilon);
        adam_mb[l] = recipe.beta1 * adam_mb[l] + (1.0 - recipe.beta1) * grads.biases[l];
        adam_vb[l] = recipe.beta2 * adam_vb[l] +
                     (1.0 - recipe.beta2) * grads.biases[l].array().square().matrix();
        result.params.biases[l].array() -=
            recipe.learning_rate * (adam_mb[l].array() / bias1) /
            ((adam_vb[l].array() / bias2).sqrt() + recipe.epsilon);
      }
    }
    const double train_mse = epoch_loss / static_cast<double>(seen);
    const double val_mse = mlp_loss(result.params, val_x, val_y);
    if (!std::isfinite(train_mse) || !std::isfinite(val_mse)) {
      throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
    }
    result.train_loss.push_back(train_mse);
    result.val_loss.push_back(val_mse);
  }
  return result;
}

Eigen::MatrixXd predict(const MlpParams& params, const Eigen::MatrixXd& theta_batch, int jobs) {
  params.validate();
  check_batch(params, theta_batch);
  const int workers = std::max(1, jobs);
  if (workers == 1 || theta_batch.rows() < 2 * workers) {
    return mlp_forward(params, theta_batch);
  }
  Eigen::MatrixXd out(theta_batch.rows(), params.output_dim());
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (theta_batch.rows() + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min<Eigen::Index>(begin + chunk, theta_batch.rows());
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      out.middleRows(begin, end - begin) =
          mlp_forward(params, theta_batch.middleRows(begin, end - begin));
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace crossdex
