#include <cmath>
#include <random>

#include "doctest.h"
#include "wgboost/error.hpp"
#include "wgboost/target.hpp"

using namespace wgboost;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Independent finite-difference checks of both derivative orders.
void check_derivatives(const EvidentialTarget& t, const Vector& theta) {
    const double h = 1e-5;
    const Vector g = t.log_grad(theta);
    const Matrix H = t.log_hess_full(theta);
    const Vector hd = t.log_hess_diag(theta);
    for (Index i = 0; i < theta.size(); ++i) {
        Vector up = theta, down = theta;
        up[i] += h;
        down[i] -= h;
        const double fd = (t.log_density(up) - t.log_density(down)) / (2 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
        const Vector col = (t.log_grad(up) - t.log_grad(down)) / (2 * h);
        for (Index j = 0; j < theta.size(); ++j) CHECK(std::abs(col[j] - H(j, i)) <= 1e-5 * std::max(1.0, std::abs(H(j, i))));
        CHECK(hd[i] == doctest::Approx(H(i, i)).epsilon(1e-12));
    }
}

} // namespace

TEST_CASE("normal target closed-form values") {
    const NormalLocationScaleTarget t(0.0);
    const Vector g = t.log_grad(vec({0.0, 0.0}));
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-15));
    const Vector d = t.log_hess_diag(vec({0.0, 0.0}));
    CHECK(d[0] == doctest::Approx(-1.01).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(-0.01).epsilon(1e-15));
    CHECK(t.log_hess_full(vec({0.0, 0.0}))(0, 1) == 0.0);
}

TEST_CASE("normal target log density matches the stated formula") {
    const NormalLocationScaleTarget t(1.3);
    const double m = 0.4, s = -0.2;
    const double expected = -0.5 * (1.3 - m) * (1.3 - m) * std::exp(-2 * s) - m * m / 200.0 - 1.01 * s - 0.01 * std::exp(-s);
    CHECK(t.log_density(vec({m, s})) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("normal target derivatives agree with finite differences and diag is negative") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const NormalLocationScaleTarget t(2.0 * n(rng));
        const Vector theta = vec({n(rng), 0.7 * n(rng)});
        check_derivatives(t, theta);
        CHECK((t.log_hess_diag(theta).array() < 0.0).all());
    }
}

TEST_CASE("categorical target closed-form values") {
    CHECK(CategoricalTarget(1, 2).log_grad(vec({0.0}))[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(CategoricalTarget(2, 2).log_grad(vec({0.0}))[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(CategoricalTarget(2, 2).log_hess_diag(vec({0.0}))[0] == doctest::Approx(-0.26).epsilon(1e-15));
}

TEST_CASE("categorical target log density matches the stated formula") {
    const CategoricalTarget t(2, 4);
    const Vector q = vec({0.3, -1.0, 2.0});
    const double z = 1.0 + std::exp(0.3) + std::exp(-1.0) + std::exp(2.0);
    const double expected = -1.0 - std::log(z) - q.squaredNorm() / 200.0;
    CHECK(t.log_density(q) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("categorical target derivatives agree with finite differences") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int k = 2; k <= 11; ++k) {
        for (int y = 1; y <= k; y += 3) {
            const CategoricalTarget t(y, k);
            Vector q(k - 1);
            for (Index j = 0; j < q.size(); ++j) q[j] = n(rng);
            check_derivatives(t, q);
            CHECK((t.log_hess_diag(q).array() < 0.0).all());
        }
    }
}

TEST_CASE("categorical softmax is stable for large coordinates") {
    const CategoricalTarget t(1, 3);
    const Vector g = t.log_grad(vec({800.0, -800.0}));
    CHECK(g.allFinite());
    CHECK(to_simplex(vec({800.0, 0.0})).allFinite());
}

TEST_CASE("gaussian target") {
    const GaussianTarget t(vec({1.0, -2.0}), 0.5);
    const Vector g = t.log_grad(vec({0.0, 0.0}));
    CHECK(g[0] == doctest::Approx(2.0));
    CHECK(g[1] == doctest::Approx(-4.0));
    check_derivatives(t, vec({0.3, 0.1}));
}

TEST_CASE("simplex transform") {
    const Vector third = to_simplex(vec({0.0, 0.0}));
    for (Index j = 0; j < 3; ++j) CHECK(third[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const Vector p = to_simplex(vec({std::log(2.0)}));
    CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const Vector q = vec({n(rng), n(rng), n(rng), n(rng)});
        const Vector s = to_simplex(q);
        CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((to_log_ratio(s) - q).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("target contract errors") {
    const NormalLocationScaleTarget t(0.0);
    CHECK_THROWS_AS(t.log_grad(vec({1.0})), ContractError);
    CHECK_THROWS_AS(t.log_grad(vec({std::nan(""), 0.0})), ContractError);
    CHECK_THROWS_AS(CategoricalTarget(0, 3), Error);
    CHECK_THROWS_AS(CategoricalTarget(4, 3), Error);
    CHECK_THROWS_AS(CategoricalTarget(1, 1), Error);
    CHECK_THROWS_AS(GaussianTarget(vec({0.0}), 0.0), Error);
}
