#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace probe::nn {

enum class NnErrc {
    shape_mismatch,
    detached_loss,
    non_finite,
};

struct NnError : std::runtime_error {
    NnErrc code;
    NnError(NnErrc c, const std::string& what) : std::runtime_error(what), code(c) {}
};

// Dense row-major tensor of 64-bit floats. Value semantics; a Tensor is
// immutable once handed to the tape.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int64_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<int64_t> s);
    static Tensor full(std::vector<int64_t> s, double v);
    static Tensor scalar(double v) { return {{1}, {v}}; }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int64_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
    int64_t cols() const { return shape.empty() ? 0 : shape.back(); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
    double at(int64_t i) const { return data[static_cast<size_t>(i)]; }
    double& at(int64_t i, int64_t j) { return data[static_cast<size_t>(i * cols() + j)]; }
    double at(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * cols() + j)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

std::string shape_str(const std::vector<int64_t>& s);
int64_t shape_numel(const std::vector<int64_t>& s);

}  // namespace probe::nn
