#pragma once

#include "wgboost/types.hpp"

namespace wgboost {

// Gaussian kernel k(a, b) = exp(-|a - b|^2 / scale).
class KernelConfig {
public:
    static constexpr double kBoostingScale = 0.1;
    static constexpr double kMmdScale = 0.025;

    explicit KernelConfig(double scale = kBoostingScale);

    double scale() const noexcept { return scale_; }

private:
    double scale_;
};

double kernel_eval(const VectorCRef& a, const VectorCRef& b, const KernelConfig& cfg);

// Gradient with respect to the first argument: (-2/h) (a - b) k(a, b).
Vector kernel_grad(const VectorCRef& a, const VectorCRef& b, const KernelConfig& cfg);

namespace detail {

// Unchecked squared distance between row i of `a` and row j of `b`.
inline double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
    double acc = 0.0;
    for (Index c = 0; c < a.cols(); ++c) {
        const double diff = a(i, c) - b(j, c);
        acc += diff * diff;
    }
    return acc;
}

} // namespace detail
} // namespace wgboost
