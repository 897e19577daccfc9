#include "wgboost/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "wgboost/error.hpp"
#include "wgboost/target.hpp"

namespace wgboost {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178; // 0.5 * log(2 pi)

void check_regression_particles(const ParticleSet& particles) {
    if (particles.rows() == 0 || particles.cols() != 2) {
        throw ContractError("regression particles must be N x 2 (location, log scale)");
    }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

} // namespace

Standardization Standardization::fit(std::span<const double> y) {
    if (y.empty()) throw DataError("cannot standardise an empty response");
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return Standardization{mean, std::max(std::sqrt(ss / n), kStdFloor)};
}

double log_predictive_normal(const ParticleSet& particles, double y) {
    check_regression_particles(particles);
    const Index n = particles.rows();
    Vector terms(n);
    for (Index i = 0; i < n; ++i) {
        const double log_sigma = particles(i, 1);
        const double z = (y - particles(i, 0)) * std::exp(-log_sigma);
        terms[i] = -0.5 * z * z - log_sigma - kLogSqrt2Pi;
    }
    const double top = terms.maxCoeff();
    if (!std::isfinite(top)) return top;
    return top + std::log((terms.array() - top).exp().sum()) - std::log(static_cast<double>(n));
}

double predictive_nll_normal(std::span<const ParticleSet> particles, std::span<const double> y,
                             const Standardization& s) {
    if (particles.size() != y.size() || y.empty()) throw ContractError("predictions and responses differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total -= log_predictive_normal(particles[i], s.forward(y[i]));
    return total / static_cast<double>(y.size()) + std::log(s.y_std);
}

double point_predict_normal(const ParticleSet& particles) {
    check_regression_particles(particles);
    return particles.col(0).mean();
}

double point_predict_rmse(std::span<const ParticleSet> particles, std::span<const double> y,
                          const Standardization& s) {
    if (particles.size() != y.size() || y.empty()) throw ContractError("predictions and responses differ in length");
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = point_predict_normal(particles[i]) - s.forward(y[i]);
        ss += r * r;
    }
    return s.y_std * std::sqrt(ss / static_cast<double>(y.size()));
}

double predictive_quantile_normal(const ParticleSet& particles, double prob) {
    check_regression_particles(particles);
    if (!(prob > 0.0 && prob < 1.0)) throw ContractError("quantile probability must lie in (0, 1)");
    const Index n = particles.rows();
    const Vector sigma = particles.col(1).array().exp();
    double lo = (particles.col(0) - 10.0 * sigma).minCoeff();
    double hi = (particles.col(0) + 10.0 * sigma).maxCoeff();
    auto cdf = [&](double t) {
        double c = 0.0;
        for (Index i = 0; i < n; ++i) c += normal_cdf((t - particles(i, 0)) / sigma[i]);
        return c / static_cast<double>(n);
    };
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Vector predictive_class_probs(const ParticleSet& particles, int num_classes) {
    if (particles.rows() == 0 || num_classes < 2 || particles.cols() != num_classes - 1) {
        throw ContractError("classification particles must be N x (k-1)");
    }
    Vector total = Vector::Zero(num_classes);
    for (Index i = 0; i < particles.rows(); ++i) total += to_simplex(particles.row(i).transpose());
    return total / static_cast<double>(particles.rows());
}

int predict_class(const ParticleSet& particles, int num_classes) {
    const Vector probs = predictive_class_probs(particles, num_classes);
    Index best = 0;
    for (Index j = 1; j < probs.size(); ++j) {
        if (probs[j] > probs[best]) best = j;
    }
    return static_cast<int>(best) + 1;
}

double ood_score(const ParticleSet& particles, int num_classes) {
    if (particles.rows() < 2) throw ContractError("the OOD score needs at least two particles");
    if (num_classes < 2 || particles.cols() != num_classes - 1) {
        throw ContractError("classification particles must be N x (k-1)");
    }
    Matrix simplex(particles.rows(), num_classes);
    for (Index i = 0; i < particles.rows(); ++i) simplex.row(i) = to_simplex(particles.row(i).transpose()).transpose();
    const Eigen::RowVectorXd mean = simplex.colwise().mean();
    const double n = static_cast<double>(particles.rows());
    const double max_var = ((simplex.rowwise() - mean).array().square().colwise().sum() / n).maxCoeff();
    return 1.0 / std::max(max_var, kOodVarianceFloor);
}

double pr_auc(std::span<const double> scores, std::span<const bool> labels) {
    if (scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
    const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), true));
    if (positives == 0.0) throw DataError("PR-AUC needs at least one positive");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double area = 0.0;
    double tp = 0.0;
    double seen = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += labels[order[j]] ? 1.0 : 0.0;
            ++j;
        }
        seen += static_cast<double>(j - i);
        const double recall = tp / positives;
        area += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
        i = j;
    }
    return area;
}

double mmd_squared(const ParticleSet& a, const ParticleSet& b, const KernelConfig& kernel) {
    check_particles(a);
    check_particles(b);
    if (a.cols() != b.cols()) throw ContractError("MMD particle sets differ in dimension");
    auto mean_kernel = [&](const ParticleSet& p, const ParticleSet& q) {
        double s = 0.0;
        for (Index i = 0; i < p.rows(); ++i) {
            for (Index j = 0; j < q.rows(); ++j) s += kernel_eval(p.row(i).transpose(), q.row(j).transpose(), kernel);
        }
        return s / static_cast<double>(p.rows() * q.rows());
    };
    return mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
}

double expected_kernel_normal(double x, const Normal1D& b, const KernelConfig& kernel) {
    const double h = kernel.scale();
    const double denom = h + 2.0 * b.sd * b.sd;
    return std::sqrt(h / denom) * std::exp(-(x - b.mean) * (x - b.mean) / denom);
}

double expected_kernel_normal_pair(const Normal1D& b, const KernelConfig& kernel) {
    const double h = kernel.scale();
    return std::sqrt(h / (h + 4.0 * b.sd * b.sd));
}

double mmd_squared(const ParticleSet& a, const Normal1D& b, const KernelConfig& kernel) {
    check_particles(a);
    if (a.cols() != 1) throw ContractError("MMD against a 1-d normal needs 1-d particles");
    if (!(b.sd > 0.0)) throw ContractError("normal reference needs a positive sd");
    const Index n = a.rows();
    double self = 0.0;
    double cross = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double diff = a(i, 0) - a(j, 0);
            self += std::exp(-diff * diff / kernel.scale());
        }
        cross += expected_kernel_normal(a(i, 0), b, kernel);
    }
    const double nn = static_cast<double>(n);
    return self / (nn * nn) - 2.0 * cross / nn + expected_kernel_normal_pair(b, kernel);
}

} // namespace wgboost
