#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include "wgboost/kernel.hpp"
#include "wgboost/random.hpp"
#include "wgboost/target.hpp"
#include "wgboost/types.hpp"

namespace wgboost {

// Update-direction estimators. Every estimator returns the signed N x d
// direction that is added to the particles (ascent on log mu, descent on KL).

struct FirstOrder {};
struct DiagNewton {};
struct FullNewton {};
struct Langevin {
    double rate = 0.1; // noise scale is sqrt(2 / rate)
};

using DirectionKind = std::variant<FirstOrder, DiagNewton, FullNewton, Langevin>;

std::string direction_name(const DirectionKind& kind);

/// Parses "first_order", "diag_newton", "full_newton" or "langevin". The
/// Langevin variant takes `langevin_rate`.
DirectionKind parse_direction(std::string_view name, double langevin_rate);

inline constexpr double kNewtonDenominatorFloor = 1e-6;

/// Kernel-smoothed KL gradient (the SVGD direction):
/// row n = mean_m [ grad log mu(x_m) k(x_n, x_m) + grad_{x_m} k(x_n, x_m) ].
/// The second term is the gradient with respect to the averaged particle,
/// which pushes x_n away from x_m.
Matrix smoothed_grad(const ParticleSet& particles, const EvidentialTarget& target,
                     const KernelConfig& kernel);

/// Kernel-smoothed diagonal of the KL Hessian:
/// row n = mean_m [ -diag hess log mu(x_m) k(x_n, x_m)^2 + grad k (.) grad k ].
Matrix hess_diag(const ParticleSet& particles, const EvidentialTarget& target,
                 const KernelConfig& kernel);

/// smoothed_grad / max(hess_diag, kNewtonDenominatorFloor), elementwise.
Matrix diag_newton(const ParticleSet& particles, const EvidentialTarget& target,
                   const KernelConfig& kernel);

/// Block Newton direction K H^{-1} G with K the (Nd x Nd) block Gram matrix,
/// H the smoothed block Hessian and G the stacked smoothed gradient. A failed
/// solve is retried once with ridge jitter; `datum` only labels errors.
Matrix full_newton(const ParticleSet& particles, const EvidentialTarget& target,
                   const KernelConfig& kernel, std::size_t datum = 0);

/// Unadjusted-Langevin pseudo residual: grad log mu(x_n) + sqrt(2/rate) xi_n.
Matrix langevin_direction(const ParticleSet& particles, const EvidentialTarget& target,
                          double rate, Rng& rng);

/// Dispatches on `kind`. `rng` is required for Langevin only.
Matrix compute_direction(const DirectionKind& kind, const ParticleSet& particles,
                         const EvidentialTarget& target, const KernelConfig& kernel,
                         Rng* rng = nullptr, std::size_t datum = 0);

/// Assembled pieces of the block Newton system, exposed for testing.
struct NewtonSystem {
    Matrix gram;     // K, (Nd x Nd)
    Matrix hessian;  // H, (Nd x Nd)
    Vector gradient; // G, stacked rows of smoothed_grad
};

NewtonSystem assemble_newton_system(const ParticleSet& particles, const EvidentialTarget& target,
                                    const KernelConfig& kernel);

} // namespace wgboost
