#pragma once

#include <cstdint>

// Dense kernels behind the tensor ops and the transformer forward passes.
//
// Production kernels take a `parallel` flag and split work across OpenMP
// threads only over independent output elements: each element is produced by
// one thread with a fixed arithmetic order, so results are bitwise identical
// for any thread count. Backward kernels accumulate (+=) into their gradient
// outputs.
//
// kern::ref holds naive serial formulations of the same math. They are the
// test oracles and the serial baseline for the kernel benchmark; nothing in
// the production path calls them.

namespace probe::kern {

// c[m,n] = a[m,k] * b[k,n]   (accumulate: c += a*b)
void matmul(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n,
            bool accumulate = false, bool parallel = false);

void transpose(double* dst, const double* src, int64_t rows, int64_t cols, bool parallel = false);

void add(double* out, const double* a, const double* b, int64_t n, bool parallel = false);
void axpy(double* y, double alpha, const double* x, int64_t n, bool parallel = false);
void scale(double* y, const double* x, double s, int64_t n, bool parallel = false);

// y[r,:] = x[r,:] + bias ; bias_grad[j] += sum_r dy[r,j]
void add_bias(double* y, const double* x, const double* bias, int64_t rows, int64_t cols,
              bool parallel = false);
void bias_grad(double* dbias, const double* dy, int64_t rows, int64_t cols, bool parallel = false);

// row-wise layer norm; mean/rstd are per-row saves for the backward pass
void layer_norm(double* y, double* mean, double* rstd, const double* x, const double* gamma,
                const double* beta, int64_t rows, int64_t cols, double eps, bool parallel = false);
void layer_norm_grad(double* dx, double* dgamma, double* dbeta, const double* dy, const double* x,
                     const double* mean, const double* rstd, const double* gamma, int64_t rows,
                     int64_t cols, bool parallel = false);

// exact Gaussian-CDF GELU
void gelu(double* y, const double* x, int64_t n, bool parallel = false);
void gelu_grad(double* dx, const double* dy, const double* x, int64_t n, bool parallel = false);

void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols, bool parallel = false);
void softmax_rows_grad(double* dx, const double* dy, const double* y, int64_t rows, int64_t cols,
                       bool parallel = false);

// causal multi-head attention over already-projected q/k/v, all [t, d].
// weights is the post-softmax attention matrix, [heads, t, t], saved for
// the backward pass (entries above the diagonal are zero).
void attention(double* out, double* weights, const double* q, const double* k, const double* v,
               int64_t t, int64_t d, int heads, bool parallel = false);
void attention_grad(double* dq, double* dk, double* dv, const double* dout, const double* weights,
                    const double* q, const double* k, const double* v, int64_t t, int64_t d,
                    int heads);

// embedding rows
void gather_rows(double* out, const double* table, const int32_t* ids, int64_t n, int64_t d,
                 bool parallel = false);
void scatter_add_rows(double* table_grad, const double* dout, const int32_t* ids, int64_t n,
                      int64_t d);

namespace ref {

// naive dot-product triple loop
void matmul(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n);
void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols);
void layer_norm(double* y, const double* x, const double* gamma, const double* beta, int64_t rows,
                int64_t cols, double eps);
void gelu(double* y, const double* x, int64_t n);
void attention(double* out, const double* q, const double* k, const double* v, int64_t t,
               int64_t d, int heads);

}  // namespace ref

}  // namespace probe::kern
