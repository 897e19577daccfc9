#pragma once

#include <span>
#include <vector>

#include "wgboost/kernel.hpp"
#include "wgboost/types.hpp"

namespace wgboost {

struct Standardization {
    static constexpr double kStdFloor = 1e-8;

    double y_mean = 0.0;
    double y_std = 1.0;

    /// Mean and population standard deviation of `y`, std floored at kStdFloor.
    static Standardization fit(std::span<const double> y);

    double forward(double y) const noexcept { return (y - y_mean) / y_std; }
    double inverse(double y_std_units) const noexcept { return y_mean + y_std * y_std_units; }
};

// ---- regression: particle rows are (m, log sigma) in standardised units ----

/// log of the particle-averaged normal density at a standardised response.
double log_predictive_normal(const ParticleSet& particles, double y_standardized);

/// Mean over points of -log p(y | x) in raw units.
double predictive_nll_normal(std::span<const ParticleSet> particles, std::span<const double> y,
                             const Standardization& s);

/// Mean of the particle locations, in standardised units.
double point_predict_normal(const ParticleSet& particles);

/// RMSE of the particle-mean point prediction, in raw units.
double point_predict_rmse(std::span<const ParticleSet> particles, std::span<const double> y,
                          const Standardization& s);

/// Quantile of the particle-averaged normal mixture (standardised units).
double predictive_quantile_normal(const ParticleSet& particles, double prob);

// ---- classification: particle rows are log-ratio coordinates in R^{k-1} ----

/// Particle average of the simplex images. Sums to one.
Vector predictive_class_probs(const ParticleSet& particles, int num_classes);

/// 1-based argmax of the predictive probabilities; ties go to the lower class.
int predict_class(const ParticleSet& particles, int num_classes);

inline constexpr double kOodVarianceFloor = 1e-12;

/// Inverse of the largest per-class population variance of the simplex
/// images. Larger means more in-distribution. Requires N >= 2.
double ood_score(const ParticleSet& particles, int num_classes);

/// Step-wise area under the precision-recall curve (average precision).
/// `labels[i]` true marks a positive; equal scores share one threshold.
double pr_auc(std::span<const double> scores, std::span<const bool> labels);

// ---- maximum mean discrepancy ----

struct Normal1D {
    double mean = 0.0;
    double sd = 1.0;
};

/// Squared MMD (V-statistic) between two particle sets.
double mmd_squared(const ParticleSet& a, const ParticleSet& b,
                   const KernelConfig& kernel = KernelConfig(KernelConfig::kMmdScale));

/// Squared MMD between a one-dimensional particle set and a normal law, using
/// the closed-form Gaussian expectations of the kernel.
double mmd_squared(const ParticleSet& a, const Normal1D& b,
                   const KernelConfig& kernel = KernelConfig(KernelConfig::kMmdScale));

/// E_{t ~ N(mean, sd^2)} k(x, t).
double expected_kernel_normal(double x, const Normal1D& b, const KernelConfig& kernel);

/// E k(t, t') for independent t, t' ~ N(mean, sd^2).
double expected_kernel_normal_pair(const Normal1D& b, const KernelConfig& kernel);

} // namespace wgboost
