#include "probe/tensor.hpp"

#include <cmath>
#include <sstream>

namespace probe::nn {

Tensor Tensor::zeros(std::vector<int64_t> s) {
    const int64_t n = shape_numel(s);
    return {std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0)};
}

Tensor Tensor::full(std::vector<int64_t> s, double v) {
    const int64_t n = shape_numel(s);
    return {std::move(s), std::vector<double>(static_cast<size_t>(n), v)};
}

bool Tensor::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string shape_str(const std::vector<int64_t>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

int64_t shape_numel(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

}  // namespace probe::nn
