#pragma once

// Reverse-mode differentiation over dense double matrices. A Graph records
// one forward pass; backward() pushes gradients into the bound Parameters.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace hloc::nn {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  void zero_grad() { grad = Mat::Zero(value.rows(), value.cols()); }
};

class Graph {
 public:
  using Id = int;

  Id constant(Mat value);
  Id param(Parameter& p);

  const Mat& value(Id id) const { return nodes_[id].value; }
  const Mat& grad(Id id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  Id matmul(Id a, Id b);
  Id matmul_transposed(Id a, Id b);  // a * b^T
  Id add(Id a, Id b);
  Id add_row(Id a, Id row);  // broadcast a 1 x n row over every row of a
  Id mul(Id a, Id b);
  Id scale(Id a, double s);
  Id one_minus(Id a);
  Id tanh(Id a);
  Id sigmoid(Id a);
  Id gelu(Id a);
  Id rows(Id a, int begin, int count);
  Id cols(Id a, int begin, int count);
  Id vstack(const std::vector<Id>& parts);
  Id hstack(const std::vector<Id>& parts);
  // out[t] = a[t + offset], zero where t + offset is out of range.
  Id shift_rows(Id a, int offset);
  Id softmax_rows(Id a);
  Id layer_norm_rows(Id a, Id gamma, Id beta, double eps = 1e-5);

  // Scalar losses (1 x 1).
  Id softmax_cross_entropy(Id logits_column, int target);
  Id bce_with_logits(Id logits_column, const Eigen::VectorXd& targets);  // mean over rows

  void backward(Id loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    Parameter* param = nullptr;
    std::function<void(Graph&, Node&)> back;
  };

  Id push(Mat value, std::function<void(Graph&, Node&)> back);
  Mat& g(Id id) { return nodes_[id].grad; }
  const Mat& v(Id id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
};

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies grad * grad_scale to each parameter.
  void step(std::vector<Parameter>& params, double grad_scale = 1.0);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace hloc::nn
