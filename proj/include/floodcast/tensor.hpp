#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "floodcast/errors.hpp"

namespace floodcast {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;

    // Tape fields. The tape is rebuilt on every forward pass: each op node
    // holds strong references to its inputs and a closure that scatters the
    // node's gradient into them.
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::function<void(TensorImpl&)> backward_fn;
    std::vector<double> grad;  // allocated lazily during backward

    TensorImpl(Shape s, std::vector<double> d);
};

}  // namespace detail

/// Dense row-major 64-bit float tensor with reverse-mode autodiff.
///
/// Tensors are immutable values: copying shares the underlying buffer and
/// a tensor's data never changes after construction. Gradients accumulate
/// on a separate buffer only while backward() runs.
class Tensor {
  public:
    Tensor() = default;

    static Tensor from_data(Shape shape, std::vector<double> data);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::int64_t size() const { return static_cast<std::int64_t>(impl_->data.size()); }
    std::int64_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t rank() const { return impl_->shape.size(); }
    const std::vector<double>& data() const { return impl_->data; }

    double at(std::initializer_list<std::int64_t> idx) const;
    double item() const;

    Tensor with_requires_grad() const;

    bool requires_grad() const { return impl_->requires_grad; }

    /// Identity of the underlying node; keys gradient maps.
    const detail::TensorImpl* node() const { return impl_.get(); }

    friend class TensorOps;

  private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl> impl_;
};

/// Gradient of a scalar loss with respect to a set of parameters,
/// keyed by parameter node identity.
class GradientMap {
  public:
    void insert(const Tensor& param, std::vector<double> grad);
    /// Gradient for `param`; all zeros if the parameter was unreachable.
    const std::vector<double>& at(const Tensor& param) const;
    std::size_t size() const { return grads_.size(); }

  private:
    std::unordered_map<const detail::TensorImpl*, std::vector<double>> grads_;
};

// ---- Elementwise and linear-algebra ops -----------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// Matrix product of a [m x k] and b [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& x);

/// Gated linear unit: p * sigmoid(q), elementwise; shapes must match.
Tensor glu(const Tensor& p, const Tensor& q);

/// Causal 1-D convolution over the leading (time) axis.
/// x: [N x M x C_in], kernel: [Kt x C_in x C_out] -> [(N-Kt+1) x M x C_out].
/// Output at time t reads inputs t..t+Kt-1 only; no padding.
Tensor causal_conv1d(const Tensor& x, const Tensor& kernel);

/// Layer normalization across the channel axis of x [N x M x C], followed
/// by per-channel affine gain/bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double epsilon = 1e-5);

/// Chebyshev graph convolution applied independently at each time index.
/// x: [N x M x C_in], theta: [K x C_in x C_out], lt: scaled Laplacian
/// [M x M] treated as a constant (no gradient). Evaluates
/// sum_k theta_k T_k(lt) x via the three-term recursion.
Tensor cheb_conv(const Tensor& x, const Tensor& theta, const Tensor& lt);

/// x[t0:t1] along the time axis of a rank-3 tensor.
Tensor slice_time(const Tensor& x, std::int64_t t0, std::int64_t t1);

/// x[..., c0:c1] along the channel axis of a rank-3 tensor.
Tensor slice_channels(const Tensor& x, std::int64_t c0, std::int64_t c1);

/// View with a new shape; element count must be preserved.
Tensor reshape(const Tensor& x, Shape shape);

/// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& x);

/// Adds a learnable scalar b (shape [1]) to every element of x.
Tensor add_bias(const Tensor& x, const Tensor& b);

/// Mean squared error between prediction and a constant target.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// ---- Reverse-mode differentiation ------------------------------------------

/// Runs the tape backward from a scalar loss and returns gradients for the
/// given parameters; parameters the loss does not depend on get zeros.
GradientMap backward(const Tensor& loss, const std::vector<Tensor>& params);

}  // namespace floodcast
