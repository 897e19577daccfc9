#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "wgboost/types.hpp"

namespace wgboost {

/// Output distribution attached to one training datum, known up to its
/// normalising constant. Boosting only ever consumes derivatives of the log
/// density, evaluated in unconstrained coordinates.
class EvidentialTarget {
public:
    virtual ~EvidentialTarget() = default;

    virtual Index dim() const noexcept = 0;

    /// Unnormalised log density; used for diagnostics and tests only.
    virtual double log_density(const VectorCRef& theta) const = 0;

    // Unchecked kernels used on the hot path. `out` has the right shape.
    virtual void log_grad_into(const VectorCRef& theta, VectorRef out) const = 0;
    virtual void log_hess_diag_into(const VectorCRef& theta, VectorRef out) const = 0;
    virtual void log_hess_full_into(const VectorCRef& theta, MatrixRef out) const = 0;

    // Checked versions: throw ContractError on a dimension mismatch or a
    // non-finite coordinate.
    Vector log_grad(const VectorCRef& theta) const;
    Vector log_hess_diag(const VectorCRef& theta) const;
    Matrix log_hess_full(const VectorCRef& theta) const;

protected:
    void check_input(const VectorCRef& theta) const;
};

using TargetPtr = std::shared_ptr<const EvidentialTarget>;

struct NormalPrior {
    double loc_scale = 10.0; // sd of the normal prior on the mean
    double ig_shape = 0.01;  // inverse-gamma prior on the scale
    double ig_rate = 0.01;
};

/// Posterior of (m, log sigma) given one response y under a normal likelihood,
/// a N(0, loc_scale^2) prior on m and an inverse-gamma prior on sigma.
class NormalLocationScaleTarget final : public EvidentialTarget {
public:
    explicit NormalLocationScaleTarget(double y, NormalPrior prior = {});

    double response() const noexcept { return y_; }
    const NormalPrior& prior() const noexcept { return prior_; }

    Index dim() const noexcept override { return 2; }
    double log_density(const VectorCRef& theta) const override;
    void log_grad_into(const VectorCRef& theta, VectorRef out) const override;
    void log_hess_diag_into(const VectorCRef& theta, VectorRef out) const override;
    void log_hess_full_into(const VectorCRef& theta, MatrixRef out) const override;

private:
    double y_;
    NormalPrior prior_;
};

/// Posterior of the log-ratio coordinates q' in R^{k-1} of a categorical
/// parameter given one label, under an isotropic normal prior on q'.
class CategoricalTarget final : public EvidentialTarget {
public:
    static constexpr double kDefaultPriorScale = 10.0;

    /// `label` is 1-based in {1, ..., num_classes}.
    CategoricalTarget(int label, int num_classes, double prior_scale = kDefaultPriorScale);

    int label() const noexcept { return label_; }
    int num_classes() const noexcept { return num_classes_; }

    Index dim() const noexcept override { return num_classes_ - 1; }
    double log_density(const VectorCRef& theta) const override;
    void log_grad_into(const VectorCRef& theta, VectorRef out) const override;
    void log_hess_diag_into(const VectorCRef& theta, VectorRef out) const override;
    void log_hess_full_into(const VectorCRef& theta, MatrixRef out) const override;

private:
    int label_;
    int num_classes_;
    double prior_precision_;
};

/// Isotropic normal N(mean, variance * I). Used by the synthetic sin
/// benchmarks, where each datum's output distribution is given directly.
class GaussianTarget final : public EvidentialTarget {
public:
    GaussianTarget(Vector mean, double variance);

    const Vector& mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }

    Index dim() const noexcept override { return mean_.size(); }
    double log_density(const VectorCRef& theta) const override;
    void log_grad_into(const VectorCRef& theta, VectorRef out) const override;
    void log_hess_diag_into(const VectorCRef& theta, VectorRef out) const override;
    void log_hess_full_into(const VectorCRef& theta, MatrixRef out) const override;

private:
    Vector mean_;
    double variance_;
};

/// Logistic transform R^{k-1} -> simplex in R^k (last class is the reference).
Vector to_simplex(const VectorCRef& log_ratio);

/// Inverse of to_simplex: log(q_j / q_k), j < k.
Vector to_log_ratio(const VectorCRef& probs);

namespace detail {
// Writes the k-vector of probabilities for log-ratio coordinates into `out`.
void simplex_into(const VectorCRef& log_ratio, VectorRef out);
} // namespace detail

} // namespace wgboost
