#pragma once

#include <vector>

#include <Eigen/Dense>

#include "imdp/rng.hpp"
#include "json.hpp"

namespace imdp::rl {

struct Linear {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

using Gradients = std::vector<Linear>;

/// Fully connected ReLU network with a linear output layer. Batches are
/// column-major: one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// `sizes` lists input, hidden and output widths. Weights use a uniform
  /// fan-in initialisation drawn from `rng`; biases start at zero.
  Mlp(const std::vector<int>& sizes, Rng& rng);

  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;
  /// Parameter gradients for dLoss/dOutput = `grad_out`.
  Gradients backward(const Tape& tape, const Eigen::MatrixXd& grad_out) const;
  /// Gradient with respect to the network input.
  Eigen::MatrixXd input_gradient(const Tape& tape, const Eigen::MatrixXd& grad_out) const;

  Gradients zeros() const;
  /// target <- (1 - tau) target + tau source.
  void soft_update_from(const Mlp& source, double tau);

  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& params);
  std::size_t parameter_count() const;

  int input_size() const { return static_cast<int>(layers.front().W.cols()); }
  int output_size() const { return static_cast<int>(layers.back().W.rows()); }

  std::vector<Linear> layers;
};

Eigen::VectorXd flatten(const Gradients& g);

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Mlp& net, const Gradients& grads);
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Gradients m_;
  Gradients v_;
};

/// Scalar Adam for a single parameter such as a log temperature.
class ScalarAdam {
 public:
  explicit ScalarAdam(double lr = 0.0) : lr_(lr) {}
  void step(double& param, double grad);

 private:
  double lr_;
  double m_ = 0.0;
  double v_ = 0.0;
  long t_ = 0;
};

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace imdp::rl
