#include "wgboost/direction.hpp"

#include <cmath>
#include <string>

#include "wgboost/error.hpp"

namespace wgboost {

std::string direction_name(const DirectionKind& kind) {
    struct Visitor {
        std::string operator()(const FirstOrder&) const { return "first_order"; }
        std::string operator()(const DiagNewton&) const { return "diag_newton"; }
        std::string operator()(const FullNewton&) const { return "full_newton"; }
        std::string operator()(const Langevin&) const { return "langevin"; }
    };
    return std::visit(Visitor{}, kind);
}

DirectionKind parse_direction(std::string_view name, double langevin_rate) {
    if (name == "first_order") return FirstOrder{};
    if (name == "diag_newton") return DiagNewton{};
    if (name == "full_newton") return FullNewton{};
    if (name == "langevin") {
        if (!(langevin_rate > 0.0)) throw ConfigError("langevin rate must be positive");
        return Langevin{langevin_rate};
    }
    throw ConfigError("unknown direction '" + std::string(name) +
                      "' (expected first_order, diag_newton, full_newton or langevin)");
}

namespace {

// Per-particle target derivatives, one column per particle.
struct ParticleDerivatives {
    Matrix positions;    // d x N
    Matrix log_grad;     // d x N
    Matrix neg_hess_diag; // d x N, -diag hess log mu
};

ParticleDerivatives evaluate_target(const ParticleSet& particles, const EvidentialTarget& target,
                                    bool with_hess) {
    check_particles(particles);
    if (particles.cols() != target.dim()) {
        throw ContractError("particle dimension " + std::to_string(particles.cols()) +
                            " does not match target dimension " + std::to_string(target.dim()));
    }
    const Index n = particles.rows();
    const Index d = particles.cols();
    ParticleDerivatives out{particles.transpose(), Matrix(d, n), Matrix()};
    if (with_hess) out.neg_hess_diag.resize(d, n);
    Vector scratch(d);
    for (Index m = 0; m < n; ++m) {
        target.log_grad_into(out.positions.col(m), out.log_grad.col(m));
        if (with_hess) {
            target.log_hess_diag_into(out.positions.col(m), scratch);
            out.neg_hess_diag.col(m) = -scratch;
        }
    }
    return out;
}

struct SmoothedTerms {
    Matrix grad; // N x d
    Matrix hess; // N x d, empty unless requested
};

// One pass over the N^2 particle pairs shared by the gradient and the
// diagonal Hessian.
SmoothedTerms smoothed_terms(const ParticleSet& particles, const EvidentialTarget& target,
                             const KernelConfig& kernel, bool with_hess) {
    const ParticleDerivatives deriv = evaluate_target(particles, target, with_hess);
    const Index n_particles = particles.rows();
    const Index d = particles.cols();
    const double inv_h = 1.0 / kernel.scale();
    SmoothedTerms out{Matrix::Zero(n_particles, d), Matrix()};
    if (with_hess) out.hess = Matrix::Zero(n_particles, d);

    const Matrix& pos = deriv.positions;
    for (Index n = 0; n < n_particles; ++n) {
        for (Index m = 0; m < n_particles; ++m) {
            double sq = 0.0;
            for (Index c = 0; c < d; ++c) {
                const double diff = pos(c, n) - pos(c, m);
                sq += diff * diff;
            }
            const double kv = std::exp(-sq * inv_h);
            for (Index c = 0; c < d; ++c) {
                // gradient of k(x_n, t) in t, evaluated at t = x_m
                const double repulsion = 2.0 * inv_h * (pos(c, n) - pos(c, m)) * kv;
                out.grad(n, c) += deriv.log_grad(c, m) * kv + repulsion;
                if (with_hess) out.hess(n, c) += deriv.neg_hess_diag(c, m) * kv * kv + repulsion * repulsion;
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n_particles);
    out.grad *= inv_n;
    if (with_hess) out.hess *= inv_n;
    return out;
}

} // namespace

Matrix smoothed_grad(const ParticleSet& particles, const EvidentialTarget& target, const KernelConfig& kernel) {
    return smoothed_terms(particles, target, kernel, false).grad;
}

Matrix hess_diag(const ParticleSet& particles, const EvidentialTarget& target, const KernelConfig& kernel) {
    return smoothed_terms(particles, target, kernel, true).hess;
}

Matrix diag_newton(const ParticleSet& particles, const EvidentialTarget& target, const KernelConfig& kernel) {
    SmoothedTerms terms = smoothed_terms(particles, target, kernel, true);
    return terms.grad.cwiseQuotient(terms.hess.cwiseMax(kNewtonDenominatorFloor));
}

NewtonSystem assemble_newton_system(const ParticleSet& particles, const EvidentialTarget& target,
                                    const KernelConfig& kernel) {
    const ParticleDerivatives deriv = evaluate_target(particles, target, false);
    const Index n_particles = particles.rows();
    const Index d = particles.cols();
    const Index size = n_particles * d;
    const double inv_h = 1.0 / kernel.scale();
    const Matrix& pos = deriv.positions;

    Matrix gram(n_particles, n_particles);
    // repulsion[m](c, n): gradient of k(x_n, t) in t at t = x_m
    std::vector<Matrix> repulsion(static_cast<std::size_t>(n_particles), Matrix(d, n_particles));
    for (Index n = 0; n < n_particles; ++n) {
        for (Index m = 0; m < n_particles; ++m) {
            double sq = 0.0;
            for (Index c = 0; c < d; ++c) {
                const double diff = pos(c, n) - pos(c, m);
                sq += diff * diff;
            }
            const double kv = std::exp(-sq * inv_h);
            gram(n, m) = kv;
            for (Index c = 0; c < d; ++c) {
                repulsion[static_cast<std::size_t>(m)](c, n) = 2.0 * inv_h * (pos(c, n) - pos(c, m)) * kv;
            }
        }
    }

    std::vector<Matrix> neg_hess(static_cast<std::size_t>(n_particles), Matrix(d, d));
    for (Index m = 0; m < n_particles; ++m) {
        target.log_hess_full_into(pos.col(m), neg_hess[static_cast<std::size_t>(m)]);
        neg_hess[static_cast<std::size_t>(m)] *= -1.0;
    }

    NewtonSystem sys{Matrix::Zero(size, size), Matrix::Zero(size, size), Vector::Zero(size)};
    const double inv_n = 1.0 / static_cast<double>(n_particles);
    for (Index a = 0; a < n_particles; ++a) {
        for (Index b = 0; b < n_particles; ++b) {
            auto block = sys.hessian.block(a * d, b * d, d, d);
            for (Index m = 0; m < n_particles; ++m) {
                const auto& rep = repulsion[static_cast<std::size_t>(m)];
                block.noalias() += (gram(a, m) * gram(b, m)) * neg_hess[static_cast<std::size_t>(m)];
                block.noalias() += rep.col(a) * rep.col(b).transpose();
            }
            block *= inv_n;
            sys.gram.block(a * d, b * d, d, d).diagonal().setConstant(gram(a, b));
        }
        for (Index m = 0; m < n_particles; ++m) {
            for (Index c = 0; c < d; ++c) {
                sys.gradient[a * d + c] += deriv.log_grad(c, m) * gram(a, m) +
                                           repulsion[static_cast<std::size_t>(m)](c, a);
            }
        }
    }
    sys.gradient *= inv_n;
    return sys;
}

namespace {

bool try_solve(const Matrix& h, const Vector& g, Vector& w) {
    Eigen::FullPivLU<Matrix> lu(h);
    if (!lu.isInvertible()) return false;
    w = lu.solve(g);
    return w.allFinite();
}

} // namespace

Matrix full_newton(const ParticleSet& particles, const EvidentialTarget& target, const KernelConfig& kernel,
                   std::size_t datum) {
    const NewtonSystem sys = assemble_newton_system(particles, target, kernel);
    Vector w;
    if (!try_solve(sys.hessian, sys.gradient, w)) {
        double lambda = 1e-6 * sys.hessian.diagonal().cwiseAbs().mean();
        if (!(lambda > 0.0) || !std::isfinite(lambda)) lambda = 1e-6;
        Matrix jittered = sys.hessian;
        jittered.diagonal().array() += lambda;
        if (!try_solve(jittered, sys.gradient, w)) {
            throw NumericError("singular smoothed Hessian in full Newton direction for datum " +
                               std::to_string(datum));
        }
    }
    const Vector v = sys.gram * w;
    const Index n_particles = particles.rows();
    const Index d = particles.cols();
    Matrix out(n_particles, d);
    for (Index n = 0; n < n_particles; ++n) {
        for (Index c = 0; c < d; ++c) out(n, c) = v[n * d + c];
    }
    return out;
}

Matrix langevin_direction(const ParticleSet& particles, const EvidentialTarget& target, double rate, Rng& rng) {
    if (!(rate > 0.0)) throw ContractError("langevin rate must be positive");
    const ParticleDerivatives deriv = evaluate_target(particles, target, false);
    const double noise_scale = std::sqrt(2.0 / rate);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(particles.rows(), particles.cols());
    for (Index n = 0; n < particles.rows(); ++n) {
        for (Index c = 0; c < particles.cols(); ++c) out(n, c) = deriv.log_grad(c, n) + noise_scale * normal(rng);
    }
    return out;
}

Matrix compute_direction(const DirectionKind& kind, const ParticleSet& particles, const EvidentialTarget& target,
                         const KernelConfig& kernel, Rng* rng, std::size_t datum) {
    struct Visitor {
        const ParticleSet& particles;
        const EvidentialTarget& target;
        const KernelConfig& kernel;
        Rng* rng;
        std::size_t datum;

        Matrix operator()(const FirstOrder&) const { return smoothed_grad(particles, target, kernel); }
        Matrix operator()(const DiagNewton&) const { return diag_newton(particles, target, kernel); }
        Matrix operator()(const FullNewton&) const { return full_newton(particles, target, kernel, datum); }
        Matrix operator()(const Langevin& l) const {
            if (rng == nullptr) throw ContractError("langevin direction requires a random source");
            return langevin_direction(particles, target, l.rate, *rng);
        }
    };
    return std::visit(Visitor{particles, target, kernel, rng, datum}, kind);
}

} // namespace wgboost
