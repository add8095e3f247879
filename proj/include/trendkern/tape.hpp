#pragma once

#include <functional>
#include <vector>

#include "trendkern/tensor.hpp"

namespace trendkern::num {

using ValueId = int;

/// Records a forward computation as a flat list of primitive applications
/// and replays exact backward rules in reverse order. Operand entries always
/// precede their consumers, so creation order is a topological order.
///
/// Every forward result is checked for NaN/Inf and rejected immediately.
/// A tape is confined to one thread; clear() recycles it between batches.
class Tape {
public:
    /// Registers an input or parameter. Leaves have no backward rule; their
    /// gradients are read back after backward().
    ValueId leaf(Tensor value);

    // Primitives. Shape rules follow standard dense-tensor semantics; a
    // mismatch throws naming the primitive and both shapes.
    ValueId matmul(ValueId a, ValueId b);          // [M,K]x[K,N] -> [M,N]
    ValueId add(ValueId a, ValueId b);             // same shape, or [M,N]+[N] row broadcast
    ValueId mul(ValueId a, ValueId b);             // elementwise, same shape
    ValueId concat(const std::vector<ValueId>& parts);  // last axis
    ValueId slice_cols(ValueId a, int lo, int hi);      // last axis, [lo, hi)
    ValueId sigmoid(ValueId a);
    ValueId tanh(ValueId a);
    ValueId relu(ValueId a);
    ValueId square(ValueId a);
    ValueId abs(ValueId a);
    ValueId mean(ValueId a);                       // scalar over all elements
    ValueId sum(ValueId a);                        // scalar over all elements
    ValueId euclidean_distance(ValueId a, ValueId b);   // [B,H]x2 -> [B] row distances
    ValueId gather(ValueId table, std::vector<int> ids);  // [V,F], ids[B] -> [B,F]
    ValueId l2_normalize(ValueId a);               // last axis; zero-norm row -> error

    // Affine conveniences (constant operand folded into the rule).
    ValueId scale(ValueId a, double factor);
    ValueId add_scalar(ValueId a, double constant);

    /// Accumulates gradients for everything the scalar loss depends on.
    /// Entries that do not contribute keep an all-zero gradient.
    void backward(ValueId loss);

    const Tensor& value(ValueId id) const { return nodes_[static_cast<size_t>(id)].value; }
    /// Valid after backward(); zeros for untouched entries.
    const Tensor& grad(ValueId id);

    size_t size() const { return nodes_.size(); }
    void clear();

private:
    using BackFn = std::function<void(Tape&, ValueId)>;

    struct Node {
        Tensor value;
        BackFn back;  // empty for leaves
    };

    ValueId push(Tensor value, BackFn back, const char* op);
    Tensor& grad_buf(ValueId id);      // lazily allocated accumulation buffer
    bool grad_touched(ValueId id) const { return touched_[static_cast<size_t>(id)] != 0; }

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<char> touched_;
};

// Row-major matrix kernels shared with the optimizer and tests.
// C[M,N] += A[M,K] * B[K,N]
void matmul_nn_acc(const double* a, const double* b, double* c, int m, int k, int n);
// C[M,N] += A^T * B where A is [K,M], B is [K,N]
void matmul_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);

}  // namespace trendkern::num
