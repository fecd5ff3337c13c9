#ifndef GUIDE_LEARN_NN_HPP_
#define GUIDE_LEARN_NN_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace guide {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fully connected network with ReLU hidden layers and a linear output.
// Batches are column-major: one sample per column. Parameters live in one
// flat vector, layer by layer, each as W (out x in, column-major) then b.
class Mlp {
 public:
  struct Cache {
    // acts[0] is the input; acts[l] the post-activation of layer l.
    std::vector<Matrix> acts;
  };

  Mlp() = default;
  // Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> sizes, uint64_t seed);

  const std::vector<int>& sizes() const { return sizes_; }
  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  Eigen::Index num_params() const { return params_.size(); }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Matrix Forward(const Matrix& x, Cache* cache = nullptr) const;
  // Smallest |pre-activation| over the hidden units for the batch x; finite
  // differences are only meaningful when this clears the step size.
  double KinkMargin(const Matrix& x) const;
  // Adds dL/dparams into *grad (if non-null) and returns dL/dx when
  // want_input_grad is set (an empty matrix otherwise).
  Matrix Backward(const Cache& cache, const Matrix& dy, Vector* grad,
                  bool want_input_grad = false) const;

 private:
  using ConstMap = Eigen::Map<const Matrix>;
  ConstMap W(size_t l) const;
  Eigen::Map<const Vector> B(size_t l) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, AdamConfig cfg);
  void Step(Vector& params, const Vector& grad);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

// target <- tau * online + (1 - tau) * target. Throws Error{kShapeMismatch}.
void SoftUpdate(const Vector& online, Vector& target, double tau);

// max_i |analytic_i - fd_i| / max(1, |analytic_i|) with central differences.
// Throws Error{kNonFiniteGradient}.
double GradientCheck(const std::function<double(const Vector&)>& loss, const Vector& point,
                     const Vector& analytic, double h = 1e-5);

}  // namespace guide

#endif  // GUIDE_LEARN_NN_HPP_
