#include "wgboost/target.hpp"

#include <cmath>
#include <string>

#include "wgboost/error.hpp"

namespace wgboost {

void EvidentialTarget::check_input(const VectorCRef& theta) const {
    if (theta.size() != dim()) {
        throw ContractError("target expects dimension " + std::to_string(dim()) + ", got " +
                            std::to_string(theta.size()));
    }
    if (!theta.allFinite()) throw ContractError("target evaluated at a non-finite point");
}

Vector EvidentialTarget::log_grad(const VectorCRef& theta) const {
    check_input(theta);
    Vector out(dim());
    log_grad_into(theta, out);
    return out;
}

Vector EvidentialTarget::log_hess_diag(const VectorCRef& theta) const {
    check_input(theta);
    Vector out(dim());
    log_hess_diag_into(theta, out);
    return out;
}

Matrix EvidentialTarget::log_hess_full(const VectorCRef& theta) const {
    check_input(theta);
    Matrix out(dim(), dim());
    log_hess_full_into(theta, out);
    return out;
}

// ---------------------------------------------------------------------------
// Normal location-scale, theta = (m, s) with s = log sigma:
//   log mu = -1/2 (y - m)^2 e^{-2s} - m^2 / (2 sigma0^2) - (alpha0 + 1) s - beta0 e^{-s}

NormalLocationScaleTarget::NormalLocationScaleTarget(double y, NormalPrior prior) : y_(y), prior_(prior) {
    if (!std::isfinite(y)) throw ContractError("normal target response must be finite");
    if (!(prior.loc_scale > 0.0) || !(prior.ig_shape > 0.0) || !(prior.ig_rate > 0.0)) {
        throw ContractError("normal prior hyperparameters must be positive");
    }
}

double NormalLocationScaleTarget::log_density(const VectorCRef& theta) const {
    check_input(theta);
    const double m = theta[0];
    const double s = theta[1];
    const double r = y_ - m;
    const double s0 = prior_.loc_scale;
    return -0.5 * r * r * std::exp(-2.0 * s) - m * m / (2.0 * s0 * s0) - (prior_.ig_shape + 1.0) * s -
           prior_.ig_rate * std::exp(-s);
}

void NormalLocationScaleTarget::log_grad_into(const VectorCRef& theta, VectorRef out) const {
    const double m = theta[0];
    const double r = y_ - m;
    const double e2 = std::exp(-2.0 * theta[1]);
    const double s0 = prior_.loc_scale;
    out[0] = r * e2 - m / (s0 * s0);
    out[1] = r * r * e2 - (prior_.ig_shape + 1.0) + prior_.ig_rate * std::exp(-theta[1]);
}

void NormalLocationScaleTarget::log_hess_diag_into(const VectorCRef& theta, VectorRef out) const {
    const double r = y_ - theta[0];
    const double e2 = std::exp(-2.0 * theta[1]);
    const double s0 = prior_.loc_scale;
    out[0] = -e2 - 1.0 / (s0 * s0);
    out[1] = -2.0 * r * r * e2 - prior_.ig_rate * std::exp(-theta[1]);
}

void NormalLocationScaleTarget::log_hess_full_into(const VectorCRef& theta, MatrixRef out) const {
    Eigen::Vector2d diag;
    log_hess_diag_into(theta, diag);
    const double off = -2.0 * (y_ - theta[0]) * std::exp(-2.0 * theta[1]);
    out(0, 0) = diag[0];
    out(1, 1) = diag[1];
    out(0, 1) = off;
    out(1, 0) = off;
}

// ---------------------------------------------------------------------------
// Categorical in log-ratio coordinates q' (reference class k):
//   log mu = [y = j < k] q'_j - log(1 + sum exp q') - |q'|^2 / (2 scale^2)

namespace detail {

void simplex_into(const VectorCRef& log_ratio, VectorRef out) {
    const Index km1 = log_ratio.size();
    // Reference class has log-ratio 0; shift by the max including it.
    double shift = 0.0;
    for (Index j = 0; j < km1; ++j) shift = std::max(shift, log_ratio[j]);
    double z = std::exp(-shift);
    for (Index j = 0; j < km1; ++j) {
        out[j] = std::exp(log_ratio[j] - shift);
        z += out[j];
    }
    out[km1] = std::exp(-shift);
    out /= z;
}

} // namespace detail

CategoricalTarget::CategoricalTarget(int label, int num_classes, double prior_scale)
    : label_(label), num_classes_(num_classes), prior_precision_(0.0) {
    if (num_classes < 2) throw ContractError("categorical target needs at least two classes");
    if (label < 1 || label > num_classes) {
        throw ContractError("class label " + std::to_string(label) + " outside {1.." +
                            std::to_string(num_classes) + "}");
    }
    if (!(prior_scale > 0.0)) throw ContractError("categorical prior scale must be positive");
    prior_precision_ = 1.0 / (prior_scale * prior_scale);
}

double CategoricalTarget::log_density(const VectorCRef& theta) const {
    check_input(theta);
    double shift = 0.0;
    for (Index j = 0; j < theta.size(); ++j) shift = std::max(shift, theta[j]);
    double z = std::exp(-shift);
    for (Index j = 0; j < theta.size(); ++j) z += std::exp(theta[j] - shift);
    const double log_z = shift + std::log(z);
    const double own = label_ < num_classes_ ? theta[label_ - 1] : 0.0;
    return own - log_z - 0.5 * prior_precision_ * theta.squaredNorm();
}

void CategoricalTarget::log_grad_into(const VectorCRef& theta, VectorRef out) const {
    Vector probs(num_classes_);
    detail::simplex_into(theta, probs);
    for (Index j = 0; j < theta.size(); ++j) {
        const double indicator = (j + 1 == label_) ? 1.0 : 0.0;
        out[j] = indicator - probs[j] - prior_precision_ * theta[j];
    }
}

void CategoricalTarget::log_hess_diag_into(const VectorCRef& theta, VectorRef out) const {
    Vector probs(num_classes_);
    detail::simplex_into(theta, probs);
    for (Index j = 0; j < theta.size(); ++j) out[j] = -probs[j] * (1.0 - probs[j]) - prior_precision_;
}

void CategoricalTarget::log_hess_full_into(const VectorCRef& theta, MatrixRef out) const {
    Vector probs(num_classes_);
    detail::simplex_into(theta, probs);
    const Index km1 = theta.size();
    for (Index i = 0; i < km1; ++i) {
        for (Index j = 0; j < km1; ++j) {
            out(i, j) = i == j ? -probs[i] * (1.0 - probs[i]) - prior_precision_ : probs[i] * probs[j];
        }
    }
}

// ---------------------------------------------------------------------------

GaussianTarget::GaussianTarget(Vector mean, double variance) : mean_(std::move(mean)), variance_(variance) {
    if (mean_.size() < 1 || !mean_.allFinite()) throw ContractError("gaussian target mean must be finite");
    if (!(variance > 0.0)) throw ContractError("gaussian target variance must be positive");
}

double GaussianTarget::log_density(const VectorCRef& theta) const {
    check_input(theta);
    return -0.5 * (theta - mean_).squaredNorm() / variance_;
}

void GaussianTarget::log_grad_into(const VectorCRef& theta, VectorRef out) const {
    out = (mean_ - theta) / variance_;
}

void GaussianTarget::log_hess_diag_into(const VectorCRef&, VectorRef out) const {
    out.setConstant(-1.0 / variance_);
}

void GaussianTarget::log_hess_full_into(const VectorCRef&, MatrixRef out) const {
    out.setZero();
    out.diagonal().setConstant(-1.0 / variance_);
}

// ---------------------------------------------------------------------------

Vector to_simplex(const VectorCRef& log_ratio) {
    if (!log_ratio.allFinite()) throw ContractError("to_simplex: non-finite log-ratio");
    Vector out(log_ratio.size() + 1);
    detail::simplex_into(log_ratio, out);
    return out;
}

Vector to_log_ratio(const VectorCRef& probs) {
    if (probs.size() < 2) throw ContractError("to_log_ratio: need at least two probabilities");
    if ((probs.array() <= 0.0).any()) throw ContractError("to_log_ratio: probabilities must be positive");
    const Index km1 = probs.size() - 1;
    Vector out(km1);
    for (Index j = 0; j < km1; ++j) out[j] = std::log(probs[j]) - std::log(probs[km1]);
    return out;
}

} // namespace wgboost
