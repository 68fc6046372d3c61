#include "floodcast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace floodcast {

std::int64_t numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto extent : shape) {
        if (extent < 0) {
            throw DimensionError("negative extent in shape " + shape_str(shape));
        }
        n *= extent;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

TensorImpl::TensorImpl(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != static_cast<std::int64_t>(data.size())) {
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }
}

}  // namespace detail

using detail::TensorImpl;
using Impl = std::shared_ptr<detail::TensorImpl>;

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
    return Tensor(std::make_shared<TensorImpl>(std::move(shape), std::move(data)));
}

Tensor Tensor::zeros(Shape shape) {
    auto n = numel(shape);
    return from_data(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
    auto n = numel(shape);
    return from_data(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
    if (idx.size() != impl_->shape.size()) {
        throw DimensionError("index rank does not match tensor rank");
    }
    std::int64_t flat = 0;
    std::size_t axis = 0;
    for (auto i : idx) {
        if (i < 0 || i >= impl_->shape[axis]) {
            throw DimensionError("index out of bounds on axis " + std::to_string(axis));
        }
        flat = flat * impl_->shape[axis] + i;
        ++axis;
    }
    return impl_->data[static_cast<std::size_t>(flat)];
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item() requires a single-element tensor, got shape " +
                             shape_str(impl_->shape));
    }
    return impl_->data[0];
}

Tensor Tensor::with_requires_grad() const {
    auto copy = std::make_shared<TensorImpl>(impl_->shape, impl_->data);
    copy->requires_grad = true;
    return Tensor(copy);
}

void GradientMap::insert(const Tensor& param, std::vector<double> grad) {
    grads_[param.node()] = std::move(grad);
}

const std::vector<double>& GradientMap::at(const Tensor& param) const {
    auto it = grads_.find(param.node());
    if (it == grads_.end()) {
        throw Error("gradient map has no entry for the given parameter");
    }
    return it->second;
}

// Op construction and raw kernels live behind this friend.
class TensorOps {
  public:
    static Impl impl(const Tensor& t) { return t.impl_; }

    static Tensor make(Shape shape, std::vector<double> data, std::vector<Impl> inputs,
                       std::function<void(TensorImpl&)> backward_fn) {
        auto node = std::make_shared<TensorImpl>(std::move(shape), std::move(data));
        bool needs_grad = false;
        for (const auto& in : inputs) {
            needs_grad = needs_grad || in->requires_grad;
        }
        if (needs_grad) {
            node->requires_grad = true;
            node->inputs = std::move(inputs);
            node->backward_fn = std::move(backward_fn);
        }
        return Tensor(std::move(node));
    }
};

namespace {

std::vector<double>& grad_buf(TensorImpl& node) {
    if (node.grad.size() != node.data.size()) {
        node.grad.assign(node.data.size(), 0.0);
    }
    return node.grad;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

// C[m x n] = A[m x k] * B[k x n], accumulating when acc is true.
void mm(double* c, const double* a, const double* b, std::int64_t m, std::int64_t k,
        std::int64_t n, bool acc) {
    if (!acc) {
        std::fill(c, c + m * n, 0.0);
    }
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[k x n] += A^T[k x m] * B[m x n] with A given as [m x k].
void mm_at_b(double* c, const double* a, const double* b, std::int64_t m, std::int64_t k,
             std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::int64_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto ai = TensorOps::impl(a);
    auto bi = TensorOps::impl(b);
    std::vector<double> out(ai->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ai->data[i] + bi->data[i];
    }
    return TensorOps::make(a.shape(), std::move(out), {ai, bi}, [ai, bi](TensorImpl& self) {
        if (ai->requires_grad) {
            auto& ga = grad_buf(*ai);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
        }
        if (bi->requires_grad) {
            auto& gb = grad_buf(*bi);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto ai = TensorOps::impl(a);
    auto bi = TensorOps::impl(b);
    std::vector<double> out(ai->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ai->data[i] - bi->data[i];
    }
    return TensorOps::make(a.shape(), std::move(out), {ai, bi}, [ai, bi](TensorImpl& self) {
        if (ai->requires_grad) {
            auto& ga = grad_buf(*ai);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
        }
        if (bi->requires_grad) {
            auto& gb = grad_buf(*bi);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto ai = TensorOps::impl(a);
    auto bi = TensorOps::impl(b);
    std::vector<double> out(ai->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ai->data[i] * bi->data[i];
    }
    return TensorOps::make(a.shape(), std::move(out), {ai, bi}, [ai, bi](TensorImpl& self) {
        if (ai->requires_grad) {
            auto& ga = grad_buf(*ai);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += bi->data[i] * self.grad[i];
        }
        if (bi->requires_grad) {
            auto& gb = grad_buf(*bi);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += ai->data[i] * self.grad[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    auto ai = TensorOps::impl(a);
    std::vector<double> out(ai->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ai->data[i] * factor;
    }
    return TensorOps::make(a.shape(), std::move(out), {ai}, [ai, factor](TensorImpl& self) {
        if (!ai->requires_grad) return;
        auto& ga = grad_buf(*ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * self.grad[i];
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul: expected rank-2 tensors, got " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    }
    if (a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto ai = TensorOps::impl(a);
    auto bi = TensorOps::impl(b);
    std::vector<double> out(static_cast<std::size_t>(m * n));
    mm(out.data(), ai->data.data(), bi->data.data(), m, k, n, true);
    return TensorOps::make({m, n}, std::move(out), {ai, bi}, [ai, bi, m, k, n](TensorImpl& self) {
        // dA = G * B^T, dB = A^T * G
        if (ai->requires_grad) {
            auto& ga = grad_buf(*ai);
            for (std::int64_t i = 0; i < m; ++i) {
                const double* grow = self.grad.data() + i * n;
                double* garow = ga.data() + i * k;
                for (std::int64_t p = 0; p < k; ++p) {
                    const double* brow = bi->data.data() + p * n;
                    double acc = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    garow[p] += acc;
                }
            }
        }
        if (bi->requires_grad) {
            auto& gb = grad_buf(*bi);
            mm_at_b(gb.data(), ai->data.data(), self.grad.data(), m, k, n);
        }
    });
}

Tensor relu(const Tensor& x) {
    auto xi = TensorOps::impl(x);
    std::vector<double> out(xi->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = xi->data[i] > 0.0 ? xi->data[i] : 0.0;
    }
    return TensorOps::make(x.shape(), std::move(out), {xi}, [xi](TensorImpl& self) {
        if (!xi->requires_grad) return;
        auto& gx = grad_buf(*xi);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (xi->data[i] > 0.0) gx[i] += self.grad[i];
        }
    });
}

Tensor glu(const Tensor& p, const Tensor& q) {
    check_same_shape(p, q, "glu");
    auto pi = TensorOps::impl(p);
    auto qi = TensorOps::impl(q);
    auto sig = std::make_shared<std::vector<double>>(pi->data.size());
    std::vector<double> out(pi->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        (*sig)[i] = sigmoid(qi->data[i]);
        out[i] = pi->data[i] * (*sig)[i];
    }
    return TensorOps::make(p.shape(), std::move(out), {pi, qi}, [pi, qi, sig](TensorImpl& self) {
        if (pi->requires_grad) {
            auto& gp = grad_buf(*pi);
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += (*sig)[i] * self.grad[i];
        }
        if (qi->requires_grad) {
            auto& gq = grad_buf(*qi);
            for (std::size_t i = 0; i < gq.size(); ++i) {
                const double s = (*sig)[i];
                gq[i] += pi->data[i] * s * (1.0 - s) * self.grad[i];
            }
        }
    });
}

Tensor causal_conv1d(const Tensor& x, const Tensor& kernel) {
    if (x.rank() != 3 || kernel.rank() != 3) {
        throw DimensionError("causal_conv1d: expected x [N x M x C_in] and kernel "
                             "[Kt x C_in x C_out], got " +
                             shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
    }
    const std::int64_t n = x.dim(0), m = x.dim(1), cin = x.dim(2);
    const std::int64_t kt = kernel.dim(0), cout = kernel.dim(2);
    if (kernel.dim(1) != cin) {
        throw DimensionError("causal_conv1d: kernel expects " + std::to_string(kernel.dim(1)) +
                             " input channels, signal has " + std::to_string(cin));
    }
    if (kt < 1) {
        throw DimensionError("causal_conv1d: kernel width must be >= 1");
    }
    if (n < kt) {
        throw DimensionError("causal_conv1d: window too short, time extent " + std::to_string(n) +
                             " < kernel width " + std::to_string(kt));
    }
    const std::int64_t t_out = n - kt + 1;
    auto xi = TensorOps::impl(x);
    auto ki = TensorOps::impl(kernel);

    std::vector<double> out(static_cast<std::size_t>(t_out * m * cout), 0.0);
    const double* xd = xi->data.data();
    const double* kd = ki->data.data();
    for (std::int64_t t = 0; t < t_out; ++t) {
        for (std::int64_t seg = 0; seg < m; ++seg) {
            double* orow = out.data() + (t * m + seg) * cout;
            for (std::int64_t k = 0; k < kt; ++k) {
                const double* xrow = xd + ((t + k) * m + seg) * cin;
                const double* kbase = kd + k * cin * cout;
                for (std::int64_t c = 0; c < cin; ++c) {
                    const double xv = xrow[c];
                    if (xv == 0.0) continue;
                    const double* wrow = kbase + c * cout;
                    for (std::int64_t o = 0; o < cout; ++o) {
                        orow[o] += xv * wrow[o];
                    }
                }
            }
        }
    }

    return TensorOps::make({t_out, m, cout}, std::move(out), {xi, ki},
                           [xi, ki, t_out, m, cin, cout, kt](TensorImpl& self) {
        const double* xd = xi->data.data();
        const double* kd = ki->data.data();
        const bool need_x = xi->requires_grad;
        const bool need_k = ki->requires_grad;
        double* gx = need_x ? grad_buf(*xi).data() : nullptr;
        double* gk = need_k ? grad_buf(*ki).data() : nullptr;
        for (std::int64_t t = 0; t < t_out; ++t) {
            for (std::int64_t seg = 0; seg < m; ++seg) {
                const double* grow = self.grad.data() + (t * m + seg) * cout;
                for (std::int64_t k = 0; k < kt; ++k) {
                    const std::int64_t xbase = ((t + k) * m + seg) * cin;
                    const double* kbase = kd + k * cin * cout;
                    for (std::int64_t c = 0; c < cin; ++c) {
                        const double xv = xd[xbase + c];
                        const double* wrow = kbase + c * cout;
                        double acc = 0.0;
                        if (need_k) {
                            double* gkrow = gk + k * cin * cout + c * cout;
                            for (std::int64_t o = 0; o < cout; ++o) {
                                gkrow[o] += xv * grow[o];
                                acc += wrow[o] * grow[o];
                            }
                        } else {
                            for (std::int64_t o = 0; o < cout; ++o) {
                                acc += wrow[o] * grow[o];
                            }
                        }
                        if (need_x) gx[xbase + c] += acc;
                    }
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
    if (x.rank() != 3) {
        throw DimensionError("layer_norm: expected rank-3 input, got " + shape_str(x.shape()));
    }
    const std::int64_t n = x.dim(0), m = x.dim(1), c = x.dim(2);
    if (gain.rank() != 1 || gain.dim(0) != c || bias.rank() != 1 || bias.dim(0) != c) {
        throw DimensionError("layer_norm: gain/bias must have shape [" + std::to_string(c) + "]");
    }
    auto xi = TensorOps::impl(x);
    auto gi = TensorOps::impl(gain);
    auto bi = TensorOps::impl(bias);

    const std::int64_t positions = n * m;
    auto xhat = std::make_shared<std::vector<double>>(xi->data.size());
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(positions));
    std::vector<double> out(xi->data.size());
    for (std::int64_t p = 0; p < positions; ++p) {
        const double* row = xi->data.data() + p * c;
        double mean = 0.0;
        for (std::int64_t i = 0; i < c; ++i) mean += row[i];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::int64_t i = 0; i < c; ++i) {
            const double d = row[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double inv = 1.0 / std::sqrt(var + epsilon);
        (*inv_std)[static_cast<std::size_t>(p)] = inv;
        double* hrow = xhat->data() + p * c;
        double* orow = out.data() + p * c;
        for (std::int64_t i = 0; i < c; ++i) {
            hrow[i] = (row[i] - mean) * inv;
            orow[i] = hrow[i] * gi->data[static_cast<std::size_t>(i)] +
                      bi->data[static_cast<std::size_t>(i)];
        }
    }

    return TensorOps::make({n, m, c}, std::move(out), {xi, gi, bi},
                           [xi, gi, bi, xhat, inv_std, positions, c](TensorImpl& self) {
        if (bi->requires_grad) {
            auto& gb = grad_buf(*bi);
            for (std::int64_t p = 0; p < positions; ++p) {
                const double* grow = self.grad.data() + p * c;
                for (std::int64_t i = 0; i < c; ++i) gb[static_cast<std::size_t>(i)] += grow[i];
            }
        }
        if (gi->requires_grad) {
            auto& gg = grad_buf(*gi);
            for (std::int64_t p = 0; p < positions; ++p) {
                const double* grow = self.grad.data() + p * c;
                const double* hrow = xhat->data() + p * c;
                for (std::int64_t i = 0; i < c; ++i) {
                    gg[static_cast<std::size_t>(i)] += grow[i] * hrow[i];
                }
            }
        }
        if (xi->requires_grad) {
            auto& gx = grad_buf(*xi);
            std::vector<double> h(static_cast<std::size_t>(c));
            for (std::int64_t p = 0; p < positions; ++p) {
                const double* grow = self.grad.data() + p * c;
                const double* hrow = xhat->data() + p * c;
                const double inv = (*inv_std)[static_cast<std::size_t>(p)];
                double mean_h = 0.0, mean_hx = 0.0;
                for (std::int64_t i = 0; i < c; ++i) {
                    h[static_cast<std::size_t>(i)] = grow[i] * gi->data[static_cast<std::size_t>(i)];
                    mean_h += h[static_cast<std::size_t>(i)];
                    mean_hx += h[static_cast<std::size_t>(i)] * hrow[i];
                }
                mean_h /= static_cast<double>(c);
                mean_hx /= static_cast<double>(c);
                double* gxrow = gx.data() + p * c;
                for (std::int64_t i = 0; i < c; ++i) {
                    gxrow[i] += inv * (h[static_cast<std::size_t>(i)] - mean_h - hrow[i] * mean_hx);
                }
            }
        }
    });
}

Tensor cheb_conv(const Tensor& x, const Tensor& theta, const Tensor& lt) {
    if (x.rank() != 3 || theta.rank() != 3 || lt.rank() != 2) {
        throw DimensionError("cheb_conv: expected x [N x M x C_in], theta [K x C_in x C_out], "
                             "lt [M x M]");
    }
    const std::int64_t n = x.dim(0), m = x.dim(1), cin = x.dim(2);
    const std::int64_t k_order = theta.dim(0), cout = theta.dim(2);
    if (theta.dim(1) != cin) {
        throw DimensionError("cheb_conv: theta expects " + std::to_string(theta.dim(1)) +
                             " input channels, signal has " + std::to_string(cin));
    }
    if (lt.dim(0) != m || lt.dim(1) != m) {
        throw DimensionError("cheb_conv: Laplacian is " + shape_str(lt.shape()) +
                             " but signal has " + std::to_string(m) + " nodes");
    }
    if (k_order < 1) {
        throw DimensionError("cheb_conv: polynomial order must be >= 1");
    }
    auto xi = TensorOps::impl(x);
    auto ti = TensorOps::impl(theta);
    auto li = TensorOps::impl(lt);

    // z holds T_k(lt) X_t for every time slice and order, saved for backward.
    const std::int64_t slice = m * cin;
    auto z = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(n * k_order * slice));
    std::vector<double> out(static_cast<std::size_t>(n * m * cout), 0.0);
    const double* ld = li->data.data();
    for (std::int64_t t = 0; t < n; ++t) {
        const double* xt = xi->data.data() + t * slice;
        double* zt = z->data() + t * k_order * slice;
        std::copy(xt, xt + slice, zt);
        if (k_order > 1) {
            mm(zt + slice, ld, zt, m, m, cin, false);
        }
        for (std::int64_t k = 2; k < k_order; ++k) {
            double* zk = zt + k * slice;
            mm(zk, ld, zt + (k - 1) * slice, m, m, cin, false);
            const double* zk2 = zt + (k - 2) * slice;
            for (std::int64_t i = 0; i < slice; ++i) {
                zk[i] = 2.0 * zk[i] - zk2[i];
            }
        }
        double* yt = out.data() + t * m * cout;
        for (std::int64_t k = 0; k < k_order; ++k) {
            mm(yt, zt + k * slice, ti->data.data() + k * cin * cout, m, cin, cout, true);
        }
    }

    return TensorOps::make({n, m, cout}, std::move(out), {xi, ti, li},
                           [xi, ti, li, z, n, m, cin, cout, k_order, slice](TensorImpl& self) {
        const bool need_x = xi->requires_grad;
        const bool need_t = ti->requires_grad;
        if (!need_x && !need_t) return;
        std::vector<double> lt_t;
        if (need_x) {
            lt_t.resize(static_cast<std::size_t>(m * m));
            for (std::int64_t i = 0; i < m; ++i) {
                for (std::int64_t j = 0; j < m; ++j) {
                    lt_t[static_cast<std::size_t>(j * m + i)] =
                        li->data[static_cast<std::size_t>(i * m + j)];
                }
            }
        }
        double* gt = need_t ? grad_buf(*ti).data() : nullptr;
        double* gx = need_x ? grad_buf(*xi).data() : nullptr;
        std::vector<double> b(static_cast<std::size_t>(slice));
        std::vector<double> p0(static_cast<std::size_t>(slice));
        std::vector<double> p1(static_cast<std::size_t>(slice));
        std::vector<double> p2(static_cast<std::size_t>(slice));
        for (std::int64_t t = 0; t < n; ++t) {
            const double* grow = self.grad.data() + t * m * cout;
            const double* zt = z->data() + t * k_order * slice;
            for (std::int64_t k = 0; k < k_order; ++k) {
                if (need_t) {
                    // dTheta_k += Z_k^T G_t
                    mm_at_b(gt + k * cin * cout, zt + k * slice, grow, m, cin, cout);
                }
                if (need_x) {
                    // dX_t += T_k(lt^T) (G_t Theta_k^T), recursion re-run per order.
                    const double* th = ti->data.data() + k * cin * cout;
                    for (std::int64_t i = 0; i < m; ++i) {
                        const double* gr = grow + i * cout;
                        double* br = b.data() + i * cin;
                        for (std::int64_t c = 0; c < cin; ++c) {
                            const double* trow = th + c * cout;
                            double acc = 0.0;
                            for (std::int64_t o = 0; o < cout; ++o) acc += gr[o] * trow[o];
                            br[c] = acc;
                        }
                    }
                    const double* result = b.data();
                    if (k >= 1) {
                        std::copy(b.begin(), b.end(), p0.begin());
                        mm(p1.data(), lt_t.data(), b.data(), m, m, cin, false);
                        result = p1.data();
                        for (std::int64_t j = 2; j <= k; ++j) {
                            mm(p2.data(), lt_t.data(), p1.data(), m, m, cin, false);
                            for (std::int64_t i = 0; i < slice; ++i) {
                                p2[static_cast<std::size_t>(i)] =
                                    2.0 * p2[static_cast<std::size_t>(i)] -
                                    p0[static_cast<std::size_t>(i)];
                            }
                            std::swap(p0, p1);
                            std::swap(p1, p2);
                            result = p1.data();
                        }
                    }
                    double* gxt = gx + t * slice;
                    for (std::int64_t i = 0; i < slice; ++i) gxt[i] += result[i];
                }
            }
        }
    });
}

Tensor slice_time(const Tensor& x, std::int64_t t0, std::int64_t t1) {
    if (x.rank() != 3) {
        throw DimensionError("slice_time: expected rank-3 tensor, got " + shape_str(x.shape()));
    }
    const std::int64_t n = x.dim(0), m = x.dim(1), c = x.dim(2);
    if (t0 < 0 || t1 > n || t0 >= t1) {
        throw DimensionError("slice_time: invalid range [" + std::to_string(t0) + ", " +
                             std::to_string(t1) + ") for time extent " + std::to_string(n));
    }
    auto xi = TensorOps::impl(x);
    const std::int64_t slice = m * c;
    std::vector<double> out(xi->data.begin() + t0 * slice, xi->data.begin() + t1 * slice);
    return TensorOps::make({t1 - t0, m, c}, std::move(out), {xi}, [xi, t0, slice](TensorImpl& self) {
        if (!xi->requires_grad) return;
        auto& gx = grad_buf(*xi);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            gx[static_cast<std::size_t>(t0 * slice) + i] += self.grad[i];
        }
    });
}

Tensor slice_channels(const Tensor& x, std::int64_t c0, std::int64_t c1) {
    if (x.rank() != 3) {
        throw DimensionError("slice_channels: expected rank-3 tensor, got " + shape_str(x.shape()));
    }
    const std::int64_t n = x.dim(0), m = x.dim(1), c = x.dim(2);
    if (c0 < 0 || c1 > c || c0 >= c1) {
        throw DimensionError("slice_channels: invalid range [" + std::to_string(c0) + ", " +
                             std::to_string(c1) + ") for channel extent " + std::to_string(c));
    }
    auto xi = TensorOps::impl(x);
    const std::int64_t cw = c1 - c0;
    const std::int64_t positions = n * m;
    std::vector<double> out(static_cast<std::size_t>(positions * cw));
    for (std::int64_t p = 0; p < positions; ++p) {
        const double* src = xi->data.data() + p * c + c0;
        std::copy(src, src + cw, out.data() + p * cw);
    }
    return TensorOps::make({n, m, cw}, std::move(out), {xi},
                           [xi, positions, c, c0, cw](TensorImpl& self) {
        if (!xi->requires_grad) return;
        auto& gx = grad_buf(*xi);
        for (std::int64_t p = 0; p < positions; ++p) {
            const double* grow = self.grad.data() + p * cw;
            double* gxrow = gx.data() + p * c + c0;
            for (std::int64_t i = 0; i < cw; ++i) gxrow[i] += grow[i];
        }
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                             shape_str(shape));
    }
    auto xi = TensorOps::impl(x);
    return TensorOps::make(std::move(shape), xi->data, {xi}, [xi](TensorImpl& self) {
        if (!xi->requires_grad) return;
        auto& gx = grad_buf(*xi);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    });
}

Tensor sum(const Tensor& x) {
    auto xi = TensorOps::impl(x);
    double total = 0.0;
    for (double v : xi->data) total += v;
    return TensorOps::make({1}, {total}, {xi}, [xi](TensorImpl& self) {
        if (!xi->requires_grad) return;
        auto& gx = grad_buf(*xi);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0];
    });
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
    if (b.size() != 1) {
        throw DimensionError("add_bias: bias must be a single element, got " +
                             shape_str(b.shape()));
    }
    auto xi = TensorOps::impl(x);
    auto bi = TensorOps::impl(b);
    std::vector<double> out(xi->data.size());
    const double bv = bi->data[0];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xi->data[i] + bv;
    return TensorOps::make(x.shape(), std::move(out), {xi, bi}, [xi, bi](TensorImpl& self) {
        if (xi->requires_grad) {
            auto& gx = grad_buf(*xi);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
        }
        if (bi->requires_grad) {
            auto& gb = grad_buf(*bi);
            double acc = 0.0;
            for (double g : self.grad) acc += g;
            gb[0] += acc;
        }
    });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "mse_loss");
    auto pi = TensorOps::impl(pred);
    auto ti = TensorOps::impl(target);
    const double inv_n = 1.0 / static_cast<double>(pi->data.size());
    auto diff = std::make_shared<std::vector<double>>(pi->data.size());
    double total = 0.0;
    for (std::size_t i = 0; i < diff->size(); ++i) {
        (*diff)[i] = pi->data[i] - ti->data[i];
        total += (*diff)[i] * (*diff)[i];
    }
    return TensorOps::make({1}, {total * inv_n}, {pi, ti}, [pi, ti, diff, inv_n](TensorImpl& self) {
        const double g = self.grad[0];
        if (pi->requires_grad) {
            auto& gp = grad_buf(*pi);
            for (std::size_t i = 0; i < gp.size(); ++i) {
                gp[i] += 2.0 * (*diff)[i] * inv_n * g;
            }
        }
        if (ti->requires_grad) {
            auto& gt = grad_buf(*ti);
            for (std::size_t i = 0; i < gt.size(); ++i) {
                gt[i] -= 2.0 * (*diff)[i] * inv_n * g;
            }
        }
    });
}

GradientMap backward(const Tensor& loss, const std::vector<Tensor>& params) {
    if (!loss.defined() || loss.size() != 1) {
        throw DimensionError("backward: loss must be a scalar tensor");
    }

    // Iterative postorder DFS; the tape is a DAG and each node is visited once.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack;
    auto* root = const_cast<TensorImpl*>(loss.node());
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            TensorImpl* child = node->inputs[next].get();
            ++next;
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (auto* node : order) {
        node->grad.assign(node->data.size(), 0.0);
    }
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) {
            (*it)->backward_fn(**it);
        }
    }

    GradientMap result;
    for (const auto& p : params) {
        auto* node = const_cast<TensorImpl*>(p.node());
        if (visited.count(node) && node->grad.size() == node->data.size()) {
            result.insert(p, node->grad);
        } else {
            result.insert(p, std::vector<double>(node->data.size(), 0.0));
        }
    }
    return result;
}

}  // namespace floodcast
