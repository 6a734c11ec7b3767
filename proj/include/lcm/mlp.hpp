#pragma once

// Fully connected network with leaky-ReLU hidden layers and a linear output
// layer. Parameters live in one flat vector, layer by layer: the weight matrix
// (out x in, column-major) followed by the bias vector.

#include <Eigen/Dense>
#include <random>
#include <utility>
#include <vector>

namespace lcm {

class Mlp {
 public:
  Mlp() = default;
  Mlp(int inputs, std::vector<int> hidden, int outputs, double leaky_slope);

  int inputs() const { return widths_.front(); }
  int outputs() const { return widths_.back(); }
  double leaky_slope() const { return slope_; }
  const std::vector<int>& widths() const { return widths_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  // Weights uniform in +-1/sqrt(fan_in); biases zero.
  void init_uniform(std::mt19937_64& rng);

  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each hidden layer
  };

  // Columns of X are samples. Returns outputs x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Cache& cache) const;
  // Gradient of sum(dOut .* output) with respect to the parameters.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& dOut) const;

 private:
  struct Layer {
    Eigen::Index weight_offset, bias_offset;
    int in, out;
  };
  Eigen::Map<const Eigen::MatrixXd> weights(const Layer& l) const {
    return {params_.data() + l.weight_offset, l.out, l.in};
  }
  Eigen::Map<const Eigen::VectorXd> bias(const Layer& l) const { return {params_.data() + l.bias_offset, l.out}; }

  std::vector<int> widths_;
  std::vector<Layer> layers_;
  double slope_ = 0.01;
  Eigen::VectorXd params_;
};

}  // namespace lcm
