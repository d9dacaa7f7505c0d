#include "probe/autograd.hpp"

#include <cmath>
#include <cstring>

#include "probe/kernels.hpp"

namespace probe::nn {

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw NnError(NnErrc::shape_mismatch,
                  std::string(op) + ": incompatible shapes " + shape_str(a.shape) + " and " +
                      shape_str(b.shape));
}

}  // namespace

Var Tape::param(const Tensor* external) {
    Node n;
    n.external = external;
    nodes_.push_back(std::move(n));
    params_.push_back(external);
    param_nodes_.push_back(static_cast<int32_t>(nodes_.size()) - 1);
    return {static_cast<int32_t>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {static_cast<int32_t>(nodes_.size()) - 1};
}

Var Tape::emplace(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    for (Var p : parents) {
        check(p);
        n.parents.push_back(p.id);
    }
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {static_cast<int32_t>(nodes_.size()) - 1};
}

void Tape::check(Var v) const {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
        throw NnError(NnErrc::detached_loss, "variable not recorded on this tape");
}

const Tensor& Tape::val(Var v) const {
    check(v);
    const Node& n = nodes_[static_cast<size_t>(v.id)];
    return n.external ? *n.external : n.value;
}

Tensor& Tape::grad_buf(Var v) {
    check(v);
    if (grads_.size() != nodes_.size()) grads_.resize(nodes_.size());
    Tensor& g = grads_[static_cast<size_t>(v.id)];
    if (g.data.empty()) g = Tensor::zeros(val(v).shape);
    return g;
}

const Tensor& Tape::grad(Var v) {
    check(v);
    return grad_buf(v);  // zeros if nothing reached it
}

std::unordered_map<const Tensor*, const Tensor*> Tape::backward(Var loss) {
    check(loss);
    if (val(loss).numel() != 1)
        throw NnError(NnErrc::shape_mismatch, "backward target must be a scalar");

    grads_.assign(nodes_.size(), Tensor{});

    // mark ancestors of the loss
    std::vector<char> reach(nodes_.size(), 0);
    std::vector<int32_t> stack{loss.id};
    reach[static_cast<size_t>(loss.id)] = 1;
    while (!stack.empty()) {
        const int32_t id = stack.back();
        stack.pop_back();
        for (int32_t p : nodes_[static_cast<size_t>(id)].parents) {
            if (!reach[static_cast<size_t>(p)]) {
                reach[static_cast<size_t>(p)] = 1;
                stack.push_back(p);
            }
        }
    }

    grad_buf(loss).data[0] = 1.0;

    // single reverse sweep; node ids are already topologically ordered
    for (int32_t id = loss.id; id >= 0; --id) {
        if (!reach[static_cast<size_t>(id)]) continue;
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.backward) n.backward(*this, id);
    }

    std::unordered_map<const Tensor*, const Tensor*> out;
    for (size_t i = 0; i < params_.size(); ++i) {
        const int32_t node = param_nodes_[i];
        Tensor& g = grads_[static_cast<size_t>(node)];
        if (g.data.empty()) g = Tensor::zeros(params_[i]->shape);
        out.emplace(params_[i], &g);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

Var matmul(Tape& t, Var a, Var b) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(0)) shape_fail("matmul", av, bv);
    const int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out = Tensor::zeros({m, n});
    kern::matmul(out.ptr(), av.ptr(), bv.ptr(), m, k, n);
    return t.emplace(std::move(out), {a, b}, [a, b, m, k, n](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        const Tensor& av2 = tp.val(a);
        const Tensor& bv2 = tp.val(b);
        Tensor bt = Tensor::zeros({n, k});
        kern::transpose(bt.ptr(), bv2.ptr(), k, n);
        kern::matmul(tp.grad_buf(a).ptr(), g.ptr(), bt.ptr(), m, n, k, /*accumulate=*/true);
        Tensor at = Tensor::zeros({k, m});
        kern::transpose(at.ptr(), av2.ptr(), m, k);
        kern::matmul(tp.grad_buf(b).ptr(), at.ptr(), g.ptr(), k, m, n, /*accumulate=*/true);
    });
}

Var add(Tape& t, Var a, Var b) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    if (!av.same_shape(bv)) shape_fail("add", av, bv);
    Tensor out = Tensor::zeros(av.shape);
    kern::add(out.ptr(), av.ptr(), bv.ptr(), av.numel());
    return t.emplace(std::move(out), {a, b}, [a, b](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        kern::axpy(tp.grad_buf(a).ptr(), 1.0, g.ptr(), g.numel());
        kern::axpy(tp.grad_buf(b).ptr(), 1.0, g.ptr(), g.numel());
    });
}

Var add_bias(Tape& t, Var x, Var bias) {
    const Tensor& xv = t.val(x);
    const Tensor& bv = t.val(bias);
    if (xv.ndim() != 2 || bv.numel() != xv.dim(1)) shape_fail("add_bias", xv, bv);
    const int64_t rows = xv.dim(0), cols = xv.dim(1);
    Tensor out = Tensor::zeros(xv.shape);
    kern::add_bias(out.ptr(), xv.ptr(), bv.ptr(), rows, cols);
    return t.emplace(std::move(out), {x, bias}, [x, bias, rows, cols](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        kern::axpy(tp.grad_buf(x).ptr(), 1.0, g.ptr(), g.numel());
        kern::bias_grad(tp.grad_buf(bias).ptr(), g.ptr(), rows, cols);
    });
}

Var scale(Tape& t, Var x, double s) {
    const Tensor& xv = t.val(x);
    Tensor out = Tensor::zeros(xv.shape);
    kern::scale(out.ptr(), xv.ptr(), s, xv.numel());
    return t.emplace(std::move(out), {x}, [x, s](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        kern::axpy(tp.grad_buf(x).ptr(), s, g.ptr(), g.numel());
    });
}

Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps) {
    const Tensor& xv = t.val(x);
    const Tensor& gv = t.val(gamma);
    const Tensor& bv = t.val(beta);
    if (xv.ndim() != 2 || gv.numel() != xv.dim(1)) shape_fail("layer_norm", xv, gv);
    if (bv.numel() != xv.dim(1)) shape_fail("layer_norm", xv, bv);
    const int64_t rows = xv.dim(0), cols = xv.dim(1);
    auto mean = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    auto rstd = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    Tensor out = Tensor::zeros(xv.shape);
    kern::layer_norm(out.ptr(), mean->data(), rstd->data(), xv.ptr(), gv.ptr(), bv.ptr(), rows,
                     cols, eps);
    return t.emplace(std::move(out), {x, gamma, beta},
                     [x, gamma, beta, rows, cols, mean, rstd](Tape& tp, int32_t node) {
                         const Tensor& g = tp.grad_buf(Var{node});
                         kern::layer_norm_grad(tp.grad_buf(x).ptr(), tp.grad_buf(gamma).ptr(),
                                               tp.grad_buf(beta).ptr(), g.ptr(), tp.val(x).ptr(),
                                               mean->data(), rstd->data(), tp.val(gamma).ptr(),
                                               rows, cols);
                     });
}

Var gelu(Tape& t, Var x) {
    const Tensor& xv = t.val(x);
    Tensor out = Tensor::zeros(xv.shape);
    kern::gelu(out.ptr(), xv.ptr(), xv.numel());
    return t.emplace(std::move(out), {x}, [x](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        kern::gelu_grad(tp.grad_buf(x).ptr(), g.ptr(), tp.val(x).ptr(), g.numel());
    });
}

Var softmax(Tape& t, Var x) {
    const Tensor& xv = t.val(x);
    if (xv.ndim() != 2) throw NnError(NnErrc::shape_mismatch, "softmax expects a 2-d tensor");
    const int64_t rows = xv.dim(0), cols = xv.dim(1);
    Tensor out = Tensor::zeros(xv.shape);
    kern::softmax_rows(out.ptr(), xv.ptr(), rows, cols);
    return t.emplace(std::move(out), {x}, [x, rows, cols](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        const Tensor& y = tp.val(Var{node});
        kern::softmax_rows_grad(tp.grad_buf(x).ptr(), g.ptr(), y.ptr(), rows, cols);
    });
}

Var embed(Tape& t, Var table, const std::vector<int32_t>& ids) {
    const Tensor& tv = t.val(table);
    if (tv.ndim() != 2) throw NnError(NnErrc::shape_mismatch, "embed table must be 2-d");
    for (int32_t id : ids)
        if (id < 0 || id >= tv.dim(0))
            throw NnError(NnErrc::shape_mismatch, "embed id out of range: " + std::to_string(id));
    const int64_t n = static_cast<int64_t>(ids.size()), d = tv.dim(1);
    auto saved = std::make_shared<std::vector<int32_t>>(ids);
    Tensor out = Tensor::zeros({n, d});
    kern::gather_rows(out.ptr(), tv.ptr(), ids.data(), n, d);
    return t.emplace(std::move(out), {table}, [table, saved, n, d](Tape& tp, int32_t node) {
        const Tensor& g = tp.grad_buf(Var{node});
        kern::scatter_add_rows(tp.grad_buf(table).ptr(), g.ptr(), saved->data(), n, d);
    });
}

Var cross_entropy(Tape& t, Var logits, const std::vector<int32_t>& targets) {
    const Tensor& lv = t.val(logits);
    if (lv.ndim() != 2 || static_cast<int64_t>(targets.size()) != lv.dim(0))
        throw NnError(NnErrc::shape_mismatch, "cross_entropy: targets length must match rows");
    const int64_t rows = lv.dim(0), cols = lv.dim(1);
    auto probs = std::make_shared<Tensor>(Tensor::zeros(lv.shape));
    kern::softmax_rows(probs->ptr(), lv.ptr(), rows, cols);
    auto saved = std::make_shared<std::vector<int32_t>>(targets);
    int64_t counted = 0;
    double loss = 0.0;
    for (int64_t i = 0; i < rows; ++i) {
        const int32_t tgt = targets[static_cast<size_t>(i)];
        if (tgt < 0) continue;
        if (tgt >= cols)
            throw NnError(NnErrc::shape_mismatch, "cross_entropy target out of range");
        loss -= std::log(probs->at(i, tgt));
        ++counted;
    }
    if (counted > 0) loss /= static_cast<double>(counted);
    return t.emplace(Tensor::scalar(loss), {logits},
                     [logits, probs, saved, rows, cols](Tape& tp, int32_t node) {
                         const double g = tp.grad_buf(Var{node}).data[0];
                         int64_t counted2 = 0;
                         for (int32_t tgt : *saved)
                             if (tgt >= 0) ++counted2;
                         if (counted2 == 0) return;
                         const double w = g / static_cast<double>(counted2);
                         Tensor& dx = tp.grad_buf(logits);
                         for (int64_t i = 0; i < rows; ++i) {
                             const int32_t tgt = (*saved)[static_cast<size_t>(i)];
                             if (tgt < 0) continue;
                             for (int64_t j = 0; j < cols; ++j)
                                 dx.at(i, j) += w * probs->at(i, j);
                             dx.at(i, tgt) -= w;
                         }
                     });
}

Var causal_attention(Tape& t, Var q, Var k, Var v, int heads) {
    const Tensor& qv = t.val(q);
    const Tensor& kv = t.val(k);
    const Tensor& vv = t.val(v);
    if (!qv.same_shape(kv) || !qv.same_shape(vv)) shape_fail("causal_attention", qv, kv);
    if (qv.ndim() != 2 || qv.dim(1) % heads != 0)
        throw NnError(NnErrc::shape_mismatch, "causal_attention: d_model not divisible by heads");
    const int64_t tt = qv.dim(0), d = qv.dim(1);
    auto weights = std::make_shared<Tensor>(Tensor::zeros({heads, tt, tt}));
    Tensor out = Tensor::zeros(qv.shape);
    kern::attention(out.ptr(), weights->ptr(), qv.ptr(), kv.ptr(), vv.ptr(), tt, d, heads);
    return t.emplace(std::move(out), {q, k, v},
                     [q, k, v, heads, weights, tt, d](Tape& tp, int32_t node) {
                         const Tensor& g = tp.grad_buf(Var{node});
                         kern::attention_grad(tp.grad_buf(q).ptr(), tp.grad_buf(k).ptr(),
                                              tp.grad_buf(v).ptr(), g.ptr(), weights->ptr(),
                                              tp.val(q).ptr(), tp.val(k).ptr(), tp.val(v).ptr(),
                                              tt, d, heads);
                     });
}

Var sum(Tape& t, Var x) {
    const Tensor& xv = t.val(x);
    double s = 0.0;
    for (double e : xv.data) s += e;
    return t.emplace(Tensor::scalar(s), {x}, [x](Tape& tp, int32_t node) {
        const double g = tp.grad_buf(Var{node}).data[0];
        Tensor& dx = tp.grad_buf(x);
        for (double& e : dx.data) e += g;
    });
}

}  // namespace probe::nn
