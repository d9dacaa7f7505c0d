#include "probe/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "probe/threads.hpp"

namespace probe::kern {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// OpenMP parallelism is only worth it (and only legal without oversubscribing)
// outside an existing parallel region.
inline bool go_parallel(bool requested) { return requested && !omp_in_parallel() && worker_threads() > 1; }

}  // namespace

void matmul(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n,
            bool accumulate, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        if (!accumulate) std::memset(crow, 0, sizeof(double) * static_cast<size_t>(n));
        const double* arow = a + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const double ap = arow[p];
            const double* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += ap * brow[j];
        }
    }
}

void transpose(double* dst, const double* src, int64_t rows, int64_t cols, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

void add(double* out, const double* a, const double* b, int64_t n, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void axpy(double* y, double alpha, const double* x, int64_t n, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double* y, const double* x, double s, int64_t n, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] * s;
}

void add_bias(double* y, const double* x, const double* bias, int64_t rows, int64_t cols,
              bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < rows; ++i) {
        const double* xr = x + i * cols;
        double* yr = y + i * cols;
        for (int64_t j = 0; j < cols; ++j) yr[j] = xr[j] + bias[j];
    }
}

void bias_grad(double* dbias, const double* dy, int64_t rows, int64_t cols, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int64_t i = 0; i < rows; ++i) s += dy[i * cols + j];
        dbias[j] += s;
    }
}

void layer_norm(double* y, double* mean, double* rstd, const double* x, const double* gamma,
                const double* beta, int64_t rows, int64_t cols, double eps, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < rows; ++i) {
        const double* xr = x + i * cols;
        double* yr = y + i * cols;
        double m = 0.0;
        for (int64_t j = 0; j < cols; ++j) m += xr[j];
        m /= static_cast<double>(cols);
        double v = 0.0;
        for (int64_t j = 0; j < cols; ++j) {
            const double d = xr[j] - m;
            v += d * d;
        }
        v /= static_cast<double>(cols);
        const double rs = 1.0 / std::sqrt(v + eps);
        mean[i] = m;
        rstd[i] = rs;
        for (int64_t j = 0; j < cols; ++j) yr[j] = (xr[j] - m) * rs * gamma[j] + beta[j];
    }
}

void layer_norm_grad(double* dx, double* dgamma, double* dbeta, const double* dy, const double* x,
                     const double* mean, const double* rstd, const double* gamma, int64_t rows,
                     int64_t cols, bool parallel) {
    const bool par = go_parallel(parallel);
    // per-row dx is independent; dgamma/dbeta reduce over rows per column
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < rows; ++i) {
        const double* xr = x + i * cols;
        const double* dyr = dy + i * cols;
        double* dxr = dx + i * cols;
        const double m = mean[i];
        const double rs = rstd[i];
        double sum_g = 0.0;    // mean of gamma*dy
        double sum_gx = 0.0;   // mean of gamma*dy*xhat
        for (int64_t j = 0; j < cols; ++j) {
            const double xh = (xr[j] - m) * rs;
            const double g = gamma[j] * dyr[j];
            sum_g += g;
            sum_gx += g * xh;
        }
        sum_g /= static_cast<double>(cols);
        sum_gx /= static_cast<double>(cols);
        for (int64_t j = 0; j < cols; ++j) {
            const double xh = (xr[j] - m) * rs;
            const double g = gamma[j] * dyr[j];
            dxr[j] += (g - sum_g - xh * sum_gx) * rs;
        }
    }
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t j = 0; j < cols; ++j) {
        double dg = 0.0, db = 0.0;
        for (int64_t i = 0; i < rows; ++i) {
            const double xh = (x[i * cols + j] - mean[i]) * rstd[i];
            dg += dy[i * cols + j] * xh;
            db += dy[i * cols + j];
        }
        dgamma[j] += dg;
        dbeta[j] += db;
    }
}

void gelu(double* y, const double* x, int64_t n, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < n; ++i) y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * kInvSqrt2));
}

void gelu_grad(double* dx, const double* dy, const double* x, int64_t n, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < n; ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x[i] * x[i]);
        dx[i] += dy[i] * (cdf + x[i] * pdf);
    }
}

void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols, bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < rows; ++i) {
        const double* xr = x + i * cols;
        double* yr = y + i * cols;
        double mx = xr[0];
        for (int64_t j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
        double s = 0.0;
        for (int64_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            s += yr[j];
        }
        const double inv = 1.0 / s;
        for (int64_t j = 0; j < cols; ++j) yr[j] *= inv;
    }
}

void softmax_rows_grad(double* dx, const double* dy, const double* y, int64_t rows, int64_t cols,
                       bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < rows; ++i) {
        const double* dyr = dy + i * cols;
        const double* yr = y + i * cols;
        double* dxr = dx + i * cols;
        double dot = 0.0;
        for (int64_t j = 0; j < cols; ++j) dot += dyr[j] * yr[j];
        for (int64_t j = 0; j < cols; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
    }
}

void attention(double* out, double* weights, const double* q, const double* k, const double* v,
               int64_t t, int64_t d, int heads, bool parallel) {
    const int64_t hd = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(hd));
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) collapse(2) num_threads(worker_threads()) if (par)
    for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < t; ++i) {
            double* wrow = weights + (h * t + i) * t;
            std::memset(wrow, 0, sizeof(double) * static_cast<size_t>(t));
            const double* qi = q + i * d + h * hd;
            double mx = -1e300;
            for (int64_t j = 0; j <= i; ++j) {
                const double* kj = k + j * d + h * hd;
                double s = 0.0;
                for (int64_t e = 0; e < hd; ++e) s += qi[e] * kj[e];
                s *= sc;
                wrow[j] = s;
                mx = s > mx ? s : mx;
            }
            double sum = 0.0;
            for (int64_t j = 0; j <= i; ++j) {
                wrow[j] = std::exp(wrow[j] - mx);
                sum += wrow[j];
            }
            const double inv = 1.0 / sum;
            for (int64_t j = 0; j <= i; ++j) wrow[j] *= inv;
            double* oi = out + i * d + h * hd;
            std::memset(oi, 0, sizeof(double) * static_cast<size_t>(hd));
            for (int64_t j = 0; j <= i; ++j) {
                const double w = wrow[j];
                const double* vj = v + j * d + h * hd;
                for (int64_t e = 0; e < hd; ++e) oi[e] += w * vj[e];
            }
        }
    }
}

void attention_grad(double* dq, double* dk, double* dv, const double* dout, const double* weights,
                    const double* q, const double* k, const double* v, int64_t t, int64_t d,
                    int heads) {
    const int64_t hd = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(hd));
    // serial: j-indexed accumulations into dk/dv overlap across i
    std::vector<double> dw(static_cast<size_t>(t));
    for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < t; ++i) {
            const double* wrow = weights + (h * t + i) * t;
            const double* doi = dout + i * d + h * hd;
            double dot = 0.0;
            for (int64_t j = 0; j <= i; ++j) {
                const double* vj = v + j * d + h * hd;
                double s = 0.0;
                for (int64_t e = 0; e < hd; ++e) s += doi[e] * vj[e];
                dw[static_cast<size_t>(j)] = s;
                dot += s * wrow[j];
                double* dvj = dv + j * d + h * hd;
                const double w = wrow[j];
                for (int64_t e = 0; e < hd; ++e) dvj[e] += w * doi[e];
            }
            const double* qi = q + i * d + h * hd;
            double* dqi = dq + i * d + h * hd;
            for (int64_t j = 0; j <= i; ++j) {
                const double ds = wrow[j] * (dw[static_cast<size_t>(j)] - dot) * sc;
                const double* kj = k + j * d + h * hd;
                double* dkj = dk + j * d + h * hd;
                for (int64_t e = 0; e < hd; ++e) {
                    dqi[e] += ds * kj[e];
                    dkj[e] += ds * qi[e];
                }
            }
        }
    }
}

void gather_rows(double* out, const double* table, const int32_t* ids, int64_t n, int64_t d,
                 bool parallel) {
    const bool par = go_parallel(parallel);
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (par)
    for (int64_t i = 0; i < n; ++i)
        std::memcpy(out + i * d, table + static_cast<int64_t>(ids[i]) * d,
                    sizeof(double) * static_cast<size_t>(d));
}

void scatter_add_rows(double* table_grad, const double* dout, const int32_t* ids, int64_t n,
                      int64_t d) {
    for (int64_t i = 0; i < n; ++i) {
        double* row = table_grad + static_cast<int64_t>(ids[i]) * d;
        const double* src = dout + i * d;
        for (int64_t j = 0; j < d; ++j) row[j] += src[j];
    }
}

namespace ref {

void matmul(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int64_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
    }
}

void softmax_rows(double* y, const double* x, int64_t rows, int64_t cols) {
    for (int64_t i = 0; i < rows; ++i) {
        double mx = x[i * cols];
        for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, x[i * cols + j]);
        double s = 0.0;
        for (int64_t j = 0; j < cols; ++j) s += std::exp(x[i * cols + j] - mx);
        for (int64_t j = 0; j < cols; ++j) y[i * cols + j] = std::exp(x[i * cols + j] - mx) / s;
    }
}

void layer_norm(double* y, const double* x, const double* gamma, const double* beta, int64_t rows,
                int64_t cols, double eps) {
    for (int64_t i = 0; i < rows; ++i) {
        double m = 0.0;
        for (int64_t j = 0; j < cols; ++j) m += x[i * cols + j];
        m /= static_cast<double>(cols);
        double v = 0.0;
        for (int64_t j = 0; j < cols; ++j)
            v += (x[i * cols + j] - m) * (x[i * cols + j] - m);
        v /= static_cast<double>(cols);
        for (int64_t j = 0; j < cols; ++j)
            y[i * cols + j] = (x[i * cols + j] - m) / std::sqrt(v + eps) * gamma[j] + beta[j];
    }
}

void gelu(double* y, const double* x, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
}

void attention(double* out, const double* q, const double* k, const double* v, int64_t t,
               int64_t d, int heads) {
    const int64_t hd = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<double> scores(static_cast<size_t>(t));
    for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < t; ++i) {
            for (int64_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (int64_t e = 0; e < hd; ++e) s += q[i * d + h * hd + e] * k[j * d + h * hd + e];
                scores[static_cast<size_t>(j)] = s * sc;
            }
            double mx = scores[0];
            for (int64_t j = 1; j <= i; ++j) mx = std::max(mx, scores[static_cast<size_t>(j)]);
            double sum = 0.0;
            for (int64_t j = 0; j <= i; ++j) {
                scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - mx);
                sum += scores[static_cast<size_t>(j)];
            }
            for (int64_t e = 0; e < hd; ++e) {
                double o = 0.0;
                for (int64_t j = 0; j <= i; ++j)
                    o += scores[static_cast<size_t>(j)] / sum * v[j * d + h * hd + e];
                out[i * d + h * hd + e] = o;
            }
        }
    }
}

}  // namespace ref

}  // namespace probe::kern
