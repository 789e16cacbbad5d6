#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "faultformer/rng.hpp"

namespace ff {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // sized lazily by ensure_grad()
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(const TensorNode&)> backward_fn;

    std::size_t size() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// Value handle onto a node of the differentiation graph. Copies are
// shallow; the graph is rebuilt each forward pass while parameter nodes
// persist across passes.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->data.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    std::vector<double>& grad();
    bool requires_grad() const { return node_->requires_grad; }

    double item() const;
    void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

    std::shared_ptr<TensorNode> node() const { return node_; }

private:
    std::shared_ptr<TensorNode> node_;
};

// Reverse-mode pass from a scalar root; populates grad on every
// requires_grad node reachable from it. Gradients accumulate additively
// across fan-out.
void backward(const Tensor& root);

// --- primitive ops -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// Broadcasts a length-d vector across the rows of an n x d matrix.
Tensor add_rowvec(const Tensor& x, const Tensor& b);

// Row-wise softmax over the last axis, computed with max subtraction.
Tensor softmax(const Tensor& x);

// Per-row mean-0/var-1 normalization (population variance, eps inside the
// square root) followed by the gamma/beta affine map.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Exact erf-form GELU: x * Phi(x).
Tensor gelu(const Tensor& x);

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& x, const Shape& shape);

// Rotary position encoding on an n x head_dim matrix: dimension pair i of
// row m is rotated by m * base^(-2i/head_dim). head_dim must be even.
Tensor rope(const Tensor& x, const std::vector<std::size_t>& positions, double base = 10000.0);

// 1-D convolution, channels-first: x is {C_in, L}, w is {C_out, C_in, K},
// b is {C_out}. Input is left-padded with `left_pad` zeros.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
              std::size_t left_pad);

// Pools {C, L} to {C, P}: output j averages input [floor(jL/P),
// floor((j+1)L/P)), widened to at least one element when L < P.
Tensor adaptive_avg_pool(const Tensor& x, std::size_t out_positions);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Numerically stable -log softmax(logits)[label]; logits is a flat vector
// or single-row matrix.
Tensor cross_entropy_logits(const Tensor& logits, std::size_t label);

// Mean squared error restricted to masked rows; the mean is taken over
// masked elements. With no masked rows the loss is the constant 0.
Tensor mse_masked_rows(const Tensor& pred, const std::vector<double>& target,
                       const std::vector<bool>& row_mask);

Tensor mean_of(const std::vector<Tensor>& scalars);

}  // namespace ff
