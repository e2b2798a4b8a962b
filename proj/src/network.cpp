#include "imdp/network.hpp"

#include <cmath>
#include <stdexcept>

namespace imdp::rl {

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs an input and an output width");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("layer widths must be positive");
    Linear layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) layer.W(i, j) = rng.uniform(-bound, bound);
    }
    layers.push_back(std::move(layer));
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = (layers[l].W * h).colwise() + layers[l].b;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  tape.inputs.clear();
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    tape.inputs.push_back(h);
    Eigen::MatrixXd z = (layers[l].W * h).colwise() + layers[l].b;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Gradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_out) const {
  Gradients g(layers.size());
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& in = tape.inputs[l];
    g[l].W = delta * in.transpose();
    g[l].b = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers[l].W.transpose() * delta;
    // The input of layer l is the ReLU output of layer l-1.
    delta = back.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
  }
  return g;
}

Eigen::MatrixXd Mlp::input_gradient(const Tape& tape, const Eigen::MatrixXd& grad_out) const {
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    Eigen::MatrixXd back = layers[l].W.transpose() * delta;
    if (l == 0) return back;
    delta = back.cwiseProduct((tape.inputs[l].array() > 0.0).cast<double>().matrix());
  }
  return delta;
}

Gradients Mlp::zeros() const {
  Gradients g;
  for (const auto& l : layers) {
    g.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b.size())});
  }
  return g;
}

void Mlp::soft_update_from(const Mlp& source, double tau) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].W = (1.0 - tau) * layers[l].W + tau * source.layers[l].W;
    layers[l].b = (1.0 - tau) * layers[l].b + tau * source.layers[l].b;
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

Eigen::VectorXd flatten(const Gradients& g) {
  std::size_t n = 0;
  for (const auto& l : g) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  Eigen::VectorXd out(n);
  Eigen::Index k = 0;
  for (const auto& l : g) {
    out.segment(k, l.W.size()) = Eigen::Map<const Eigen::VectorXd>(l.W.data(), l.W.size());
    k += l.W.size();
    out.segment(k, l.b.size()) = l.b;
    k += l.b.size();
  }
  return out;
}

Eigen::VectorXd Mlp::flat() const { return flatten(layers); }

void Mlp::set_flat(const Eigen::VectorXd& params) {
  if (static_cast<std::size_t>(params.size()) != parameter_count()) {
    throw std::invalid_argument("parameter vector has the wrong length");
  }
  Eigen::Index k = 0;
  for (auto& l : layers) {
    Eigen::Map<Eigen::VectorXd>(l.W.data(), l.W.size()) = params.segment(k, l.W.size());
    k += l.W.size();
    l.b = params.segment(k, l.b.size());
    k += l.b.size();
  }
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zeros()), v_(net.zeros()) {}

void Adam::step(Mlp& net, const Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    m_[l].W = beta1_ * m_[l].W + (1.0 - beta1_) * grads[l].W;
    v_[l].W = beta2_ * v_[l].W + (1.0 - beta2_) * grads[l].W.cwiseAbs2();
    m_[l].b = beta1_ * m_[l].b + (1.0 - beta1_) * grads[l].b;
    v_[l].b = beta2_ * v_[l].b + (1.0 - beta2_) * grads[l].b.cwiseAbs2();
    if (lr_ == 0.0) continue;
    net.layers[l].W.array() -= lr_ * (m_[l].W.array() / c1) / ((v_[l].W.array() / c2).sqrt() + eps_);
    net.layers[l].b.array() -= lr_ * (m_[l].b.array() / c1) / ((v_[l].b.array() / c2).sqrt() + eps_);
  }
}

void ScalarAdam::step(double& param, double grad) {
  ++t_;
  m_ = 0.9 * m_ + 0.1 * grad;
  v_ = 0.999 * v_ + 0.001 * grad * grad;
  const double mhat = m_ / (1.0 - std::pow(0.9, static_cast<double>(t_)));
  const double vhat = v_ / (1.0 - std::pow(0.999, static_cast<double>(t_)));
  param -= lr_ * mhat / (std::sqrt(vhat) + 1e-8);
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    std::vector<double> w(l.W.data(), l.W.data() + l.W.size());
    std::vector<double> b(l.b.data(), l.b.data() + l.b.size());
    layers.push_back({{"rows", l.W.rows()}, {"cols", l.W.cols()}, {"W", w}, {"b", b}});
  }
  return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  for (const auto& lj : j.at("layers")) {
    const auto rows = lj.at("rows").get<Eigen::Index>();
    const auto cols = lj.at("cols").get<Eigen::Index>();
    const auto w = lj.at("W").get<std::vector<double>>();
    const auto b = lj.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
      throw std::invalid_argument("layer parameter count does not match its shape");
    }
    Linear l{Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols), Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
    net.layers.push_back(std::move(l));
  }
  if (net.layers.empty()) throw std::invalid_argument("network has no layers");
  return net;
}

}  // namespace imdp::rl
