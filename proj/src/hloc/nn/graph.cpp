#include "hloc/nn/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace hloc::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

Graph::Id Graph::push(Mat value, std::function<void(Graph&, Node&)> back) {
  Node n;
  n.grad = Mat::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Graph::Id Graph::constant(Mat value) { return push(std::move(value), nullptr); }

Graph::Id Graph::param(Parameter& p) {
  const Id id = push(p.value, nullptr);
  nodes_[id].param = &p;
  return id;
}

Graph::Id Graph::matmul(Id a, Id b) {
  return push(v(a) * v(b), [a, b](Graph& G, Node& n) {
    G.g(a).noalias() += n.grad * G.v(b).transpose();
    G.g(b).noalias() += G.v(a).transpose() * n.grad;
  });
}

Graph::Id Graph::matmul_transposed(Id a, Id b) {
  return push(v(a) * v(b).transpose(), [a, b](Graph& G, Node& n) {
    G.g(a).noalias() += n.grad * G.v(b);
    G.g(b).noalias() += n.grad.transpose() * G.v(a);
  });
}

Graph::Id Graph::add(Id a, Id b) {
  return push(v(a) + v(b), [a, b](Graph& G, Node& n) {
    G.g(a) += n.grad;
    G.g(b) += n.grad;
  });
}

Graph::Id Graph::add_row(Id a, Id row) {
  Mat out = v(a);
  out.rowwise() += v(row).row(0);
  return push(std::move(out), [a, row](Graph& G, Node& n) {
    G.g(a) += n.grad;
    G.g(row) += n.grad.colwise().sum();
  });
}

Graph::Id Graph::mul(Id a, Id b) {
  return push(v(a).cwiseProduct(v(b)), [a, b](Graph& G, Node& n) {
    G.g(a) += n.grad.cwiseProduct(G.v(b));
    G.g(b) += n.grad.cwiseProduct(G.v(a));
  });
}

Graph::Id Graph::scale(Id a, double s) {
  return push(v(a) * s, [a, s](Graph& G, Node& n) { G.g(a) += n.grad * s; });
}

Graph::Id Graph::one_minus(Id a) {
  return push((1.0 - v(a).array()).matrix(), [a](Graph& G, Node& n) { G.g(a) -= n.grad; });
}

Graph::Id Graph::tanh(Id a) {
  return push(v(a).array().tanh().matrix(), [a](Graph& G, Node& n) {
    G.g(a).array() += n.grad.array() * (1.0 - n.value.array().square());
  });
}

Graph::Id Graph::sigmoid(Id a) {
  Mat out = (1.0 / (1.0 + (-v(a).array()).exp())).matrix();
  return push(std::move(out), [a](Graph& G, Node& n) {
    G.g(a).array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

Graph::Id Graph::gelu(Id a) {
  const Mat& x = v(a);
  Mat out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out(i) = 0.5 * x(i) * (1.0 + std::erf(x(i) * kInvSqrt2));
  }
  return push(std::move(out), [a](Graph& G, Node& n) {
    const Mat& x = G.v(a);
    Mat& ga = G.g(a);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(x(i) * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x(i) * x(i));
      ga(i) += n.grad(i) * (cdf + x(i) * pdf);
    }
  });
}

Graph::Id Graph::rows(Id a, int begin, int count) {
  return push(v(a).middleRows(begin, count), [a, begin, count](Graph& G, Node& n) {
    G.g(a).middleRows(begin, count) += n.grad;
  });
}

Graph::Id Graph::cols(Id a, int begin, int count) {
  return push(v(a).middleCols(begin, count), [a, begin, count](Graph& G, Node& n) {
    G.g(a).middleCols(begin, count) += n.grad;
  });
}

Graph::Id Graph::vstack(const std::vector<Id>& parts) {
  Eigen::Index r = 0;
  for (Id p : parts) r += v(p).rows();
  Mat out(r, v(parts.front()).cols());
  r = 0;
  for (Id p : parts) {
    out.middleRows(r, v(p).rows()) = v(p);
    r += v(p).rows();
  }
  return push(std::move(out), [parts](Graph& G, Node& n) {
    Eigen::Index r = 0;
    for (Id p : parts) {
      G.g(p) += n.grad.middleRows(r, G.v(p).rows());
      r += G.v(p).rows();
    }
  });
}

Graph::Id Graph::hstack(const std::vector<Id>& parts) {
  Eigen::Index c = 0;
  for (Id p : parts) c += v(p).cols();
  Mat out(v(parts.front()).rows(), c);
  c = 0;
  for (Id p : parts) {
    out.middleCols(c, v(p).cols()) = v(p);
    c += v(p).cols();
  }
  return push(std::move(out), [parts](Graph& G, Node& n) {
    Eigen::Index c = 0;
    for (Id p : parts) {
      G.g(p) += n.grad.middleCols(c, G.v(p).cols());
      c += G.v(p).cols();
    }
  });
}

Graph::Id Graph::shift_rows(Id a, int offset) {
  const Mat& x = v(a);
  const Eigen::Index L = x.rows();
  Mat out = Mat::Zero(L, x.cols());
  for (Eigen::Index t = 0; t < L; ++t) {
    const Eigen::Index src = t + offset;
    if (src >= 0 && src < L) out.row(t) = x.row(src);
  }
  return push(std::move(out), [a, offset](Graph& G, Node& n) {
    const Eigen::Index L = n.grad.rows();
    for (Eigen::Index t = 0; t < L; ++t) {
      const Eigen::Index src = t + offset;
      if (src >= 0 && src < L) G.g(a).row(src) += n.grad.row(t);
    }
  });
}

Graph::Id Graph::softmax_rows(Id a) {
  Mat out = v(a);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return push(std::move(out), [a](Graph& G, Node& n) {
    const Mat& y = n.value;
    const Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    G.g(a).array() += y.array() * (n.grad.colwise() - dot).array();
  });
}

Graph::Id Graph::layer_norm_rows(Id a, Id gamma, Id beta, double eps) {
  const Mat& x = v(a);
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd mean = x.rowwise().mean();
  Mat xc = x.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((xc.array().square().rowwise().sum() / static_cast<double>(d)) + eps).rsqrt().matrix();
  Mat xhat = xc.array().colwise() * inv_std.array();
  Mat out = xhat.array().rowwise() * v(gamma).row(0).array();
  out.rowwise() += v(beta).row(0);
  return push(std::move(out), [a, gamma, beta, xhat, inv_std, d](Graph& G, Node& n) {
    G.g(gamma) += n.grad.cwiseProduct(xhat).colwise().sum();
    G.g(beta) += n.grad.colwise().sum();
    const Mat dxhat = n.grad.array().rowwise() * G.v(gamma).row(0).array();
    const Eigen::VectorXd s1 = dxhat.rowwise().sum();
    const Eigen::VectorXd s2 = dxhat.cwiseProduct(xhat).rowwise().sum();
    const double inv_d = 1.0 / static_cast<double>(d);
    Mat dx = (static_cast<double>(d) * dxhat).colwise() - s1;
    dx -= (xhat.array().colwise() * s2.array()).matrix();
    G.g(a).array() += (dx.array().colwise() * (inv_std.array() * inv_d));
  });
}

Graph::Id Graph::softmax_cross_entropy(Id logits, int target) {
  const Mat& z = v(logits);
  if (z.cols() != 1 || target < 0 || target >= z.rows()) {
    throw std::invalid_argument("softmax_cross_entropy: bad target");
  }
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  Mat out(1, 1);
  out(0, 0) = lse - z(target, 0);
  return push(std::move(out), [logits, target, lse](Graph& G, Node& n) {
    Mat p = (G.v(logits).array() - lse).exp().matrix();
    p(target, 0) -= 1.0;
    G.g(logits) += n.grad(0, 0) * p;
  });
}

Graph::Id Graph::bce_with_logits(Id logits, const Eigen::VectorXd& targets) {
  const Mat& z = v(logits);
  const double count = static_cast<double>(z.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double x = z(i, 0);
    loss += std::max(x, 0.0) - x * targets(i) + std::log1p(std::exp(-std::abs(x)));
  }
  Mat out(1, 1);
  out(0, 0) = loss / count;
  return push(std::move(out), [logits, targets, count](Graph& G, Node& n) {
    const Mat& z = G.v(logits);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-z(i, 0)));
      G.g(logits)(i, 0) += n.grad(0, 0) * (p - targets(i)) / count;
    }
  });
}

void Graph::backward(Id loss) {
  nodes_[loss].grad = Mat::Ones(v(loss).rows(), v(loss).cols());
  for (Id i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back) n.back(*this, n);
    if (n.param) n.param->grad += n.grad;
  }
}

void Adam::step(std::vector<Parameter>& params, double grad_scale) {
  if (m_.empty()) {
    for (const Parameter& p : params) {
      m_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat grad = params[i].grad * grad_scale;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad.cwiseProduct(grad);
    params[i].value.array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

}  // namespace hloc::nn
