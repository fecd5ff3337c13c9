#include "guide/learn/nn.hpp"

#include <cmath>
#include <limits>

#include "guide/core/error.hpp"
#include "guide/core/rng.hpp"

namespace guide {

Mlp::Mlp(std::vector<int> sizes, uint64_t seed) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "mlp needs at least two layer sizes");
  Eigen::Index n = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "layer sizes must be positive");
    }
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_.resize(n);
  CounterRng rng(seed);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const Eigen::Index count = static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    for (Eigen::Index i = 0; i < count; ++i) params_[offsets_[l] + i] = rng.Uniform(-bound, bound);
  }
}

Mlp::ConstMap Mlp::W(size_t l) const {
  return ConstMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
}

Eigen::Map<const Vector> Mlp::B(size_t l) const {
  const Eigen::Index off = offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l];
  return Eigen::Map<const Vector>(params_.data() + off, sizes_[l + 1]);
}

Matrix Mlp::Forward(const Matrix& x, Cache* cache) const {
  if (x.rows() != in_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "mlp input has " + std::to_string(x.rows()) +
                                               " rows, expected " + std::to_string(in_dim()));
  }
  const size_t layers = sizes_.size() - 1;
  if (cache) {
    cache->acts.resize(layers + 1);
    cache->acts[0] = x;
  }
  Matrix h = x;
  for (size_t l = 0; l < layers; ++l) {
    Matrix z = W(l) * h;
    z.colwise() += B(l);
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    h = std::move(z);
    if (cache) cache->acts[l + 1] = h;
  }
  return h;
}

double Mlp::KinkMargin(const Matrix& x) const {
  if (x.rows() != in_dim()) throw Error(ErrorCode::kShapeMismatch, "mlp input has the wrong size");
  const size_t layers = sizes_.size() - 1;
  double margin = std::numeric_limits<double>::infinity();
  Matrix h = x;
  for (size_t l = 0; l + 1 < layers; ++l) {
    Matrix z = W(l) * h;
    z.colwise() += B(l);
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return margin;
}

Matrix Mlp::Backward(const Cache& cache, const Matrix& dy, Vector* grad,
                     bool want_input_grad) const {
  const size_t layers = sizes_.size() - 1;
  if (dy.rows() != out_dim() || cache.acts.size() != layers + 1 ||
      dy.cols() != cache.acts[0].cols()) {
    throw Error(ErrorCode::kShapeMismatch, "mlp backward shape mismatch");
  }
  if (grad && grad->size() != num_params()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient buffer has the wrong size");
  }
  Matrix delta = dy;
  for (size_t l = layers; l-- > 0;) {
    if (grad) {
      const Eigen::Index rows = sizes_[l + 1];
      const Eigen::Index cols = sizes_[l];
      Eigen::Map<Matrix> gw(grad->data() + offsets_[l], rows, cols);
      Eigen::Map<Vector> gb(grad->data() + offsets_[l] + rows * cols, rows);
      gw.noalias() += delta * cache.acts[l].transpose();
      gb += delta.rowwise().sum();
    }
    if (l == 0 && !want_input_grad) return {};
    Matrix prev = W(l).transpose() * delta;
    if (l > 0) prev = prev.cwiseProduct((cache.acts[l].array() > 0.0).cast<double>().matrix());
    delta = std::move(prev);
  }
  return delta;
}

Adam::Adam(Eigen::Index n, AdamConfig cfg)
    : cfg_(cfg), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

void Adam::Step(Vector& params, const Vector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam parameter size mismatch");
  }
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

void SoftUpdate(const Vector& online, Vector& target, double tau) {
  if (online.size() != target.size()) {
    throw Error(ErrorCode::kShapeMismatch, "soft update between differently sized networks");
  }
  target = tau * online + (1.0 - tau) * target;
}

double GradientCheck(const std::function<double(const Vector&)>& loss, const Vector& point,
                     const Vector& analytic, double h) {
  if (analytic.size() != point.size()) {
    throw Error(ErrorCode::kShapeMismatch, "analytic gradient size differs from the point");
  }
  Vector x = point;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = loss(x);
    x[i] = orig - h;
    const double fm = loss(x);
    x[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    if (!std::isfinite(fd) || !std::isfinite(analytic[i])) {
      throw Error(ErrorCode::kNonFiniteGradient,
                  "non-finite gradient at parameter " + std::to_string(i));
    }
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace guide
