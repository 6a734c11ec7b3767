#include "lcm/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace lcm {

Mlp::Mlp(int inputs, std::vector<int> hidden, int outputs, double leaky_slope) : slope_(leaky_slope) {
  widths_.push_back(inputs);
  for (int h : hidden) widths_.push_back(h);
  widths_.push_back(outputs);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0) throw std::invalid_argument("Mlp: layer widths must be positive");
    Layer layer{offset, offset + static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1], widths_[l], widths_[l + 1]};
    offset = layer.bias_offset + widths_[l + 1];
    layers_.push_back(layer);
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

void Mlp::init_uniform(std::mt19937_64& rng) {
  for (const auto& l : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(l.in) * l.out; ++i) params_[l.weight_offset + i] = u(rng);
    params_.segment(l.bias_offset, l.out).setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = weights(layers_[l]) * a;
    z.colwise() += bias(layers_[l]);
    if (l + 1 < layers_.size())
      a = z.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
    else
      a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, Cache& cache) const {
  cache.inputs.resize(layers_.size());
  cache.pre.resize(layers_.size() - 1);
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.inputs[l] = a;
    Eigen::MatrixXd z = weights(layers_[l]) * a;
    z.colwise() += bias(layers_[l]);
    if (l + 1 < layers_.size()) {
      a = z.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
      cache.pre[l] = std::move(z);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dOut) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = dOut;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + l.weight_offset, l.out, l.in);
    gw.noalias() = delta * cache.inputs[li].transpose();
    grad.segment(l.bias_offset, l.out) = delta.rowwise().sum();
    if (li == 0) break;
    Eigen::MatrixXd back = weights(l).transpose() * delta;
    const auto& z = cache.pre[li - 1];
    delta = back.cwiseProduct(z.unaryExpr([s = slope_](double v) { return v > 0.0 ? 1.0 : s; }));
  }
  return grad;
}

}  // namespace lcm
