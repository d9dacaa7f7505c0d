#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "probe/tensor.hpp"

namespace probe::nn {

// Handle to a node on a Tape.
struct Var {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes append in topological order (an op's inputs are
// recorded before the op), so backward() is a single reverse sweep that
// visits each reachable node exactly once; gradients accumulate additively
// where a node fans out.
//
// Parameter leaves reference caller-owned tensors and are never copied;
// inputs and interior values are owned by the tape.
class Tape {
public:
    // leaf over external storage (parameters); the pointee must outlive the tape
    Var param(const Tensor* external);
    // owned constant input
    Var input(Tensor value);

    const Tensor& val(Var v) const;
    // gradient of the last backward() target w.r.t. v (zeros if unreachable)
    const Tensor& grad(Var v);

    // Runs the reverse sweep from `loss` and returns d(loss)/d(leaf) for
    // every param leaf, keyed by the external tensor. The mapped values point
    // into tape-owned buffers valid until the next backward() or destruction.
    // Unreachable parameters get zero gradients.
    std::unordered_map<const Tensor*, const Tensor*> backward(Var loss);

    size_t size() const { return nodes_.size(); }

    // --- used by op implementations ---
    using BackwardFn = std::function<void(Tape&, int32_t node)>;
    Var emplace(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
    Tensor& grad_buf(Var v);  // lazily-allocated accumulation buffer

private:
    struct Node {
        Tensor value;                     // owned value (unused for param leaves)
        const Tensor* external = nullptr; // param leaf storage
        std::vector<int32_t> parents;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<const Tensor*> params_;
    std::vector<int32_t> param_nodes_;

    void check(Var v) const;
};

// ---- primitive ops ----
Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var add_bias(Tape& t, Var x, Var bias);
Var scale(Tape& t, Var x, double s);
Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5);
Var gelu(Tape& t, Var x);
Var softmax(Tape& t, Var x);
Var embed(Tape& t, Var table, const std::vector<int32_t>& ids);
// mean next-token NLL over targets; target -1 masks a position out of the loss
Var cross_entropy(Tape& t, Var logits, const std::vector<int32_t>& targets);
// fused causal multi-head attention over projected q/k/v
Var causal_attention(Tape& t, Var q, Var k, Var v, int heads);
Var sum(Tape& t, Var x);

}  // namespace probe::nn
