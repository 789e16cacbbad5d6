#include "faultformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ff {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) {
        if (d == 0) throw std::invalid_argument("tensor: zero dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

std::shared_ptr<TensorNode> make_node(const Shape& shape, std::vector<double> data,
                                      bool requires_grad) {
    if (shape_numel(shape) != data.size())
        throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    auto n = std::make_shared<TensorNode>();
    n->shape = shape;
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return n;
}

// Result node wiring: requires_grad propagates from parents.
Tensor make_result(const Shape& shape, std::vector<double> data,
                   std::vector<std::shared_ptr<TensorNode>> parents,
                   std::function<void(const TensorNode&)> backward_fn) {
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    auto n = make_node(shape, std::move(data), rg);
    if (rg) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(n);
}

void check_matrix(const Tensor& t, const char* what) {
    if (t.shape().size() > 2)
        throw std::invalid_argument(std::string(what) + ": expected rank <= 2, got " +
                                    shape_str(t.shape()));
}

}  // namespace

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return Tensor(make_node(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> data, bool requires_grad) {
    return Tensor(make_node(shape, std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(make_node({1}, {v}, requires_grad));
}

std::size_t Tensor::rows() const {
    check_matrix(*this, "rows");
    return node_->shape.empty() ? 1 : node_->shape[0];
}

std::size_t Tensor::cols() const {
    check_matrix(*this, "cols");
    return node_->shape.size() == 2 ? node_->shape[1] : (node_->shape.empty() ? 1 : node_->shape[0]);
}

std::vector<double>& Tensor::grad() {
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const {
    if (node_->data.size() != 1)
        throw std::logic_error("item: tensor has " + std::to_string(node_->data.size()) +
                               " elements");
    return node_->data[0];
}

void backward(const Tensor& root) {
    if (root.size() != 1)
        throw std::logic_error("backward: root must be scalar, got shape " +
                               shape_str(root.shape()));
    // Iterative post-order DFS for a reverse topological order.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    struct Frame {
        TensorNode* n;
        std::size_t next_child;
    };
    std::vector<Frame> stack;
    TensorNode* rn = root.node().get();
    if (!rn->requires_grad) return;
    stack.push_back({rn, 0});
    visited.insert(rn);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_child < f.n->parents.size()) {
            TensorNode* c = f.n->parents[f.next_child++].get();
            if (c->requires_grad && !visited.count(c)) {
                visited.insert(c);
                stack.push_back({c, 0});
            }
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }
    for (TensorNode* n : order) n->ensure_grad();
    rn->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

// --- ops -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) +
                                    " and " + shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(m * n, 0.0);
    const auto& A = a.data();
    const auto& B = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* brow = &B[p * n];
            double* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    auto an = a.node(), bn = b.node();
    return make_result(
        {m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](const TensorNode& o) {
            const auto& G = o.grad;
            if (an->requires_grad) {
                an->ensure_grad();
                // dA = G * B^T
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double* grow = &G[i * n];
                        const double* brow = &bn->data[p * n];
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        an->grad[i * k + p] += acc;
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                // dB = A^T * G
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = an->data[i * k + p];
                        if (av == 0.0) continue;
                        const double* grow = &G[i * n];
                        double* brow = &bn->grad[p * n];
                        for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
                    }
            }
        });
}

Tensor transpose(const Tensor& a) {
    if (a.shape().size() != 2)
        throw std::invalid_argument("transpose: expected matrix, got " + shape_str(a.shape()));
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
    auto an = a.node();
    return make_result({n, m}, std::move(out), {an}, [an, m, n](const TensorNode& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += o.grad[j * m + i];
    });
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto an = a.node(), bn = b.node();
    return make_result(a.shape(), std::move(out), {an, bn}, [an, bn](const TensorNode& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    auto an = a.node(), bn = b.node();
    return make_result(a.shape(), std::move(out), {an, bn}, [an, bn](const TensorNode& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] -= o.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto an = a.node(), bn = b.node();
    return make_result(a.shape(), std::move(out), {an, bn}, [an, bn](const TensorNode& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i] * an->data[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {an}, [an, c](const TensorNode& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * c;
    });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    const std::size_t n = x.rows(), d = x.cols();
    if (b.size() != d)
        throw std::invalid_argument("add_rowvec: vector length " + std::to_string(b.size()) +
                                    " vs row width " + std::to_string(d));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x.data()[i * d + j] + b.data()[j];
    auto xn = x.node(), bn = b.node();
    return make_result(x.shape(), std::move(out), {xn, bn}, [xn, bn, n, d](const TensorNode& o) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) bn->grad[j] += o.grad[i * d + j];
        }
    });
}

Tensor softmax(const Tensor& x) {
    const std::size_t n = x.rows(), d = x.cols();
    if (d < 1) throw std::invalid_argument("softmax: empty last axis");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &x.data()[i * d];
        double mx = row[0];
        for (std::size_t j = 0; j < d; ++j) {
            if (std::isnan(row[j])) throw std::domain_error("softmax: NaN input");
            mx = std::max(mx, row[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            out[i * d + j] = std::exp(row[j] - mx);
            s += out[i * d + j];
        }
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] /= s;
    }
    auto xn = x.node();
    auto yn = std::make_shared<std::vector<double>>(out);
    return make_result(x.shape(), std::move(out), {xn}, [xn, yn, n, d](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double* y = &(*yn)[i * d];
            const double* g = &o.grad[i * d];
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
            for (std::size_t j = 0; j < d; ++j) xn->grad[i * d + j] += y[j] * (g[j] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const std::size_t n = x.rows(), d = x.cols();
    if (gamma.size() != d || beta.size() != d)
        throw std::invalid_argument("layer_norm: gamma/beta length mismatch with width " +
                                    std::to_string(d));
    if (d == 1 && eps == 0.0)
        throw std::invalid_argument("layer_norm: width-1 row with eps=0 divides by zero");
    std::vector<double> out(x.size());
    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &x.data()[i * d];
        double m = 0.0;
        for (std::size_t j = 0; j < d; ++j) m += row[j];
        m /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - m) * (row[j] - m);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (row[j] - m) * is;
            (*xhat)[i * d + j] = xh;
            out[i * d + j] = gamma.data()[j] * xh + beta.data()[j];
        }
    }
    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    return make_result(
        x.shape(), std::move(out), {xn, gn, bn},
        [xn, gn, bn, xhat, inv_std, n, d](const TensorNode& o) {
            for (std::size_t i = 0; i < n; ++i) {
                const double* g = &o.grad[i * d];
                const double* xh = &(*xhat)[i * d];
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) gn->grad[j] += g[j] * xh[j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) bn->grad[j] += g[j];
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    // dxhat = g * gamma; dx = (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat)) * inv_std
                    double s1 = 0.0, s2 = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dxh = g[j] * gn->data[j];
                        s1 += dxh;
                        s2 += dxh * xh[j];
                    }
                    s1 /= static_cast<double>(d);
                    s2 /= static_cast<double>(d);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dxh = g[j] * gn->data[j];
                        xn->grad[i * d + j] += (dxh - s1 - xh[j] * s2) * (*inv_std)[i];
                    }
                }
            }
        });
}

namespace {

double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * norm_cdf(x.data()[i]);
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {xn}, [xn](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            const double v = xn->data[i];
            xn->grad[i] += o.grad[i] * (norm_cdf(v) + v * norm_pdf(v));
        }
    });
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0)
        throw std::invalid_argument("dropout: p must be in [0,1), got " + std::to_string(p));
    if (!training || p == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        (*mask)[i] = rng.uniform() < p ? 0.0 : keep_scale;
        out[i] = x.data()[i] * (*mask)[i];
    }
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {xn}, [xn, mask](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i] * (*mask)[i];
    });
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
    const std::size_t n = x.rows(), d = x.cols();
    if (r0 >= r1 || r1 > n)
        throw std::out_of_range("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                                ") out of " + std::to_string(n));
    std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(r0 * d),
                            x.data().begin() + static_cast<std::ptrdiff_t>(r1 * d));
    auto xn = x.node();
    return make_result({r1 - r0, d}, std::move(out), {xn}, [xn, r0, d](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[r0 * d + i] += o.grad[i];
    });
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    const std::size_t n = x.rows(), d = x.cols();
    if (c0 >= c1 || c1 > d)
        throw std::out_of_range("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                                ") out of " + std::to_string(d));
    const std::size_t w = c1 - c0;
    std::vector<double> out(n * w);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = x.data()[i * d + c0 + j];
    auto xn = x.node();
    return make_result({n, w}, std::move(out), {xn}, [xn, c0, d, n, w](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j) xn->grad[i * d + c0 + j] += o.grad[i * w + j];
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    const std::size_t d = parts[0].cols();
    std::size_t n = 0;
    for (const auto& p : parts) {
        if (p.cols() != d)
            throw std::invalid_argument("concat_rows: width mismatch " + shape_str(p.shape()));
        n += p.rows();
    }
    std::vector<double> out;
    out.reserve(n * d);
    std::vector<std::shared_ptr<TensorNode>> parents;
    for (const auto& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
        parents.push_back(p.node());
    }
    auto parents_copy = parents;
    return make_result({n, d}, std::move(out), std::move(parents),
                       [parents_copy](const TensorNode& o) {
                           std::size_t off = 0;
                           for (const auto& p : parents_copy) {
                               if (p->requires_grad) {
                                   p->ensure_grad();
                                   for (std::size_t i = 0; i < p->data.size(); ++i)
                                       p->grad[i] += o.grad[off + i];
                               }
                               off += p->data.size();
                           }
                       });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const std::size_t n = parts[0].rows();
    std::size_t d = 0;
    for (const auto& p : parts) {
        if (p.rows() != n)
            throw std::invalid_argument("concat_cols: row mismatch " + shape_str(p.shape()));
        d += p.cols();
    }
    std::vector<double> out(n * d);
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<std::size_t> widths;
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j) out[i * d + off + j] = p.data()[i * w + j];
        parents.push_back(p.node());
        widths.push_back(w);
        off += w;
    }
    auto parents_copy = parents;
    return make_result({n, d}, std::move(out), std::move(parents),
                       [parents_copy, widths, n, d](const TensorNode& o) {
                           std::size_t off2 = 0;
                           for (std::size_t k = 0; k < parents_copy.size(); ++k) {
                               const auto& p = parents_copy[k];
                               const std::size_t w = widths[k];
                               if (p->requires_grad) {
                                   p->ensure_grad();
                                   for (std::size_t i = 0; i < n; ++i)
                                       for (std::size_t j = 0; j < w; ++j)
                                           p->grad[i * w + j] += o.grad[i * d + off2 + j];
                               }
                               off2 += w;
                           }
                       });
}

Tensor reshape(const Tensor& x, const Shape& shape) {
    if (shape_numel(shape) != x.size())
        throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                    shape_str(shape));
    auto xn = x.node();
    return make_result(shape, x.data(), {xn}, [xn](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i];
    });
}

Tensor rope(const Tensor& x, const std::vector<std::size_t>& positions, double base) {
    const std::size_t n = x.rows(), d = x.cols();
    if (d % 2 != 0)
        throw std::invalid_argument("rope: head_dim must be even, got " + std::to_string(d));
    if (positions.size() != n)
        throw std::invalid_argument("rope: positions length " + std::to_string(positions.size()) +
                                    " vs rows " + std::to_string(n));
    auto cs = std::make_shared<std::vector<double>>(n * d);  // interleaved cos/sin per pair
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double m = static_cast<double>(positions[i]);
        for (std::size_t p = 0; p < d / 2; ++p) {
            const double theta = std::pow(base, -2.0 * static_cast<double>(p) /
                                                    static_cast<double>(d));
            const double c = std::cos(m * theta), s = std::sin(m * theta);
            (*cs)[i * d + 2 * p] = c;
            (*cs)[i * d + 2 * p + 1] = s;
            const double a = x.data()[i * d + 2 * p], b = x.data()[i * d + 2 * p + 1];
            out[i * d + 2 * p] = a * c - b * s;
            out[i * d + 2 * p + 1] = a * s + b * c;
        }
    }
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {xn}, [xn, cs, n, d](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        // Backward of a rotation is the inverse rotation applied to the grad.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < d / 2; ++p) {
                const double c = (*cs)[i * d + 2 * p], s = (*cs)[i * d + 2 * p + 1];
                const double ga = o.grad[i * d + 2 * p], gb = o.grad[i * d + 2 * p + 1];
                xn->grad[i * d + 2 * p] += ga * c + gb * s;
                xn->grad[i * d + 2 * p + 1] += -ga * s + gb * c;
            }
    });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
              std::size_t left_pad) {
    if (x.shape().size() != 2 || w.shape().size() != 3)
        throw std::invalid_argument("conv1d: x must be {C_in,L}, w must be {C_out,C_in,K}; got " +
                                    shape_str(x.shape()) + " and " + shape_str(w.shape()));
    const std::size_t cin = x.shape()[0], L = x.shape()[1];
    const std::size_t cout = w.shape()[0], k = w.shape()[2];
    if (w.shape()[1] != cin)
        throw std::invalid_argument("conv1d: channel mismatch, x has " + std::to_string(cin) +
                                    ", w expects " + std::to_string(w.shape()[1]));
    if (b.size() != cout) throw std::invalid_argument("conv1d: bias length mismatch");
    if (stride == 0) throw std::invalid_argument("conv1d: stride must be positive");
    if (L + left_pad < k)
        throw std::invalid_argument("conv1d: input length " + std::to_string(L) +
                                    " too short for kernel " + std::to_string(k));
    const std::size_t lout = (L + left_pad - k) / stride + 1;
    std::vector<double> out(cout * lout);
    for (std::size_t oc = 0; oc < cout; ++oc)
        for (std::size_t t = 0; t < lout; ++t) {
            double acc = b.data()[oc];
            for (std::size_t ic = 0; ic < cin; ++ic)
                for (std::size_t j = 0; j < k; ++j) {
                    const std::ptrdiff_t src =
                        static_cast<std::ptrdiff_t>(t * stride + j) -
                        static_cast<std::ptrdiff_t>(left_pad);
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                    acc += x.data()[ic * L + static_cast<std::size_t>(src)] *
                           w.data()[(oc * cin + ic) * k + j];
                }
            out[oc * lout + t] = acc;
        }
    auto xn = x.node(), wn = w.node(), bn = b.node();
    return make_result(
        {cout, lout}, std::move(out), {xn, wn, bn},
        [xn, wn, bn, cin, L, cout, k, stride, left_pad, lout](const TensorNode& o) {
            for (std::size_t oc = 0; oc < cout; ++oc)
                for (std::size_t t = 0; t < lout; ++t) {
                    const double g = o.grad[oc * lout + t];
                    if (g == 0.0) continue;
                    if (bn->requires_grad) {
                        bn->ensure_grad();
                        bn->grad[oc] += g;
                    }
                    for (std::size_t ic = 0; ic < cin; ++ic)
                        for (std::size_t j = 0; j < k; ++j) {
                            const std::ptrdiff_t src =
                                static_cast<std::ptrdiff_t>(t * stride + j) -
                                static_cast<std::ptrdiff_t>(left_pad);
                            if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                            const std::size_t xi = ic * L + static_cast<std::size_t>(src);
                            const std::size_t wi = (oc * cin + ic) * k + j;
                            if (wn->requires_grad) {
                                wn->ensure_grad();
                                wn->grad[wi] += g * xn->data[xi];
                            }
                            if (xn->requires_grad) {
                                xn->ensure_grad();
                                xn->grad[xi] += g * wn->data[wi];
                            }
                        }
                }
        });
}

Tensor adaptive_avg_pool(const Tensor& x, std::size_t out_positions) {
    if (x.shape().size() != 2)
        throw std::invalid_argument("adaptive_avg_pool: expected {C,L}, got " +
                                    shape_str(x.shape()));
    if (out_positions == 0) throw std::invalid_argument("adaptive_avg_pool: zero output size");
    const std::size_t C = x.shape()[0], L = x.shape()[1], P = out_positions;
    std::vector<double> out(C * P);
    auto bounds = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(P);
    for (std::size_t j = 0; j < P; ++j) {
        std::size_t s = j * L / P;
        std::size_t e = (j + 1) * L / P;
        if (e <= s) e = s + 1;  // L < P: widen empty slices to one element
        (*bounds)[j] = {s, e};
    }
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t j = 0; j < P; ++j) {
            const auto [s, e] = (*bounds)[j];
            double acc = 0.0;
            for (std::size_t t = s; t < e; ++t) acc += x.data()[c * L + t];
            out[c * P + j] = acc / static_cast<double>(e - s);
        }
    auto xn = x.node();
    return make_result({C, P}, std::move(out), {xn}, [xn, bounds, C, L, P](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t j = 0; j < P; ++j) {
                const auto [s, e] = (*bounds)[j];
                const double g = o.grad[c * P + j] / static_cast<double>(e - s);
                for (std::size_t t = s; t < e; ++t) xn->grad[c * L + t] += g;
            }
    });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    auto xn = x.node();
    return make_result({1}, {s}, {xn}, [xn](const TensorNode& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += o.grad[0];
    });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor cross_entropy_logits(const Tensor& logits, std::size_t label) {
    const std::size_t c = logits.size();
    if (label >= c)
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " out of range " + std::to_string(c));
    double mx = logits.data()[0];
    for (double v : logits.data()) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : logits.data()) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    auto probs = std::make_shared<std::vector<double>>(c);
    for (std::size_t i = 0; i < c; ++i) (*probs)[i] = std::exp(logits.data()[i] - lse);
    auto ln = logits.node();
    return make_result({1}, {lse - logits.data()[label]}, {ln},
                       [ln, probs, label](const TensorNode& o) {
                           if (!ln->requires_grad) return;
                           ln->ensure_grad();
                           for (std::size_t i = 0; i < probs->size(); ++i)
                               ln->grad[i] += o.grad[0] * ((*probs)[i] - (i == label ? 1.0 : 0.0));
                       });
}

Tensor mse_masked_rows(const Tensor& pred, const std::vector<double>& target,
                       const std::vector<bool>& row_mask) {
    const std::size_t n = pred.rows(), d = pred.cols();
    if (target.size() != n * d)
        throw std::invalid_argument("mse_masked_rows: target size mismatch");
    if (row_mask.size() != n)
        throw std::invalid_argument("mse_masked_rows: mask length mismatch");
    std::size_t masked = 0;
    for (bool m : row_mask) masked += m ? 1 : 0;
    if (masked == 0) return Tensor::scalar(0.0);
    const double denom = static_cast<double>(masked * d);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!row_mask[i]) continue;
        for (std::size_t j = 0; j < d; ++j) {
            const double e = pred.data()[i * d + j] - target[i * d + j];
            loss += e * e;
        }
    }
    loss /= denom;
    auto pn = pred.node();
    auto tgt = std::make_shared<std::vector<double>>(target);
    auto msk = std::make_shared<std::vector<bool>>(row_mask);
    return make_result({1}, {loss}, {pn}, [pn, tgt, msk, n, d, denom](const TensorNode& o) {
        if (!pn->requires_grad) return;
        pn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
            if (!(*msk)[i]) continue;
            for (std::size_t j = 0; j < d; ++j)
                pn->grad[i * d + j] +=
                    o.grad[0] * 2.0 * (pn->data[i * d + j] - (*tgt)[i * d + j]) / denom;
        }
    });
}

Tensor mean_of(const std::vector<Tensor>& scalars) {
    if (scalars.empty()) throw std::invalid_argument("mean_of: empty list");
    Tensor acc = scalars[0];
    for (std::size_t i = 1; i < scalars.size(); ++i) acc = add(acc, scalars[i]);
    return scale(acc, 1.0 / static_cast<double>(scalars.size()));
}

}  // namespace ff
