#include "wgboost/kernel.hpp"

#include <cmath>
#include <string>

#include "wgboost/error.hpp"

namespace wgboost {

void check_particles(const ParticleSet& particles) {
    if (particles.rows() < 1 || particles.cols() < 1) {
        throw ContractError("particle set must have at least one particle of dimension >= 1");
    }
    if (!particles.allFinite()) throw ContractError("particle set contains non-finite entries");
}

KernelConfig::KernelConfig(double scale) : scale_(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ContractError("kernel scale must be positive and finite, got " + std::to_string(scale));
    }
}

namespace {

void check_pair(const VectorCRef& a, const VectorCRef& b) {
    if (a.size() != b.size()) {
        throw ContractError("kernel arguments differ in dimension: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
    }
}

} // namespace

double kernel_eval(const VectorCRef& a, const VectorCRef& b, const KernelConfig& cfg) {
    check_pair(a, b);
    return std::exp(-(a - b).squaredNorm() / cfg.scale());
}

Vector kernel_grad(const VectorCRef& a, const VectorCRef& b, const KernelConfig& cfg) {
    check_pair(a, b);
    const Vector diff = a - b;
    const double k = std::exp(-diff.squaredNorm() / cfg.scale());
    return (-2.0 / cfg.scale()) * k * diff;
}

} // namespace wgboost
