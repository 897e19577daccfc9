#include <cmath>
#include <random>

#include "doctest.h"
#include "wgboost/boosting.hpp"
#include "wgboost/error.hpp"
#include "wgboost/model_io.hpp"

using namespace wgboost;

namespace {

struct SinData {
    Matrix X;
    std::vector<double> y;
};

SinData sin_data(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    std::normal_distribution<double> noise(0.0, 0.5);
    SinData d{Matrix(n, 1), std::vector<double>(static_cast<std::size_t>(n))};
    for (Index i = 0; i < n; ++i) {
        d.X(i, 0) = ux(rng);
        d.y[static_cast<std::size_t>(i)] = std::sin(d.X(i, 0)) + noise(rng);
    }
    return d;
}

BoostConfig quick_config() {
    BoostConfig cfg;
    cfg.n_particles = 5;
    cfg.max_iterations = 12;
    cfg.init.steps = 100;
    cfg.seed = 17;
    return cfg;
}

} // namespace

TEST_CASE("zero iterations reproduce the initial particles") {
    const SinData d = sin_data(30, 1);
    BoostConfig cfg = quick_config();
    cfg.max_iterations = 0;
    const auto targets = make_targets(TaskSpec{}, d.y);
    const WGBoostModel model = fit(d.X, targets, cfg);
    CHECK(model.num_iterations() == 0);
    CHECK(model.predict_particles(Vector::Constant(1, 0.7)) == model.init_particles);
    CHECK(model.predict_particles(Vector::Constant(1, -100.0)) == model.init_particles);
}

TEST_CASE("initialisation without steps is the seeded normal draw") {
    const auto targets = make_targets(TaskSpec{}, std::vector<double>{0.1, 0.2});
    BoostConfig cfg = quick_config();
    cfg.init.steps = 0;
    const Matrix a = init_particles(targets, cfg);
    CHECK(a == init_particles(targets, cfg));
    Rng rng = make_rng(cfg.seed, Stream::Init);
    std::normal_distribution<double> normal(0.0, 1.0);
    CHECK(a(0, 0) == normal(rng));
    cfg.seed += 1;
    CHECK(a != init_particles(targets, cfg));
}

TEST_CASE("staged predictions equal the cached training outputs") {
    const SinData d = sin_data(40, 2);
    for (const DirectionKind& kind : {DirectionKind{DiagNewton{}}, DirectionKind{Langevin{0.1}}}) {
        BoostConfig cfg = quick_config();
        cfg.direction = kind;
        cfg.subsample = 0.5;
        std::vector<std::vector<ParticleSet>> history;
        const auto targets = make_targets(TaskSpec{}, d.y);
        const WGBoostModel model = fit(d.X, targets, cfg, [&](const FitProgress& p) {
            history.emplace_back(p.train_outputs.begin(), p.train_outputs.end());
        });
        REQUIRE(history.size() == 13);
        for (std::size_t m = 0; m < history.size(); ++m) {
            for (Index i = 0; i < d.X.rows(); ++i) {
                CHECK(model.predict_particles(d.X.row(i).transpose(), m) == history[m][static_cast<std::size_t>(i)]);
            }
        }
        // every row moves each iteration even though trees see half the rows
        for (std::size_t m = 1; m < history.size(); ++m) {
            for (Index i = 0; i < d.X.rows(); ++i) CHECK(history[m][static_cast<std::size_t>(i)] != history[m - 1][static_cast<std::size_t>(i)]);
        }
    }
}

TEST_CASE("single particle newton boosting approaches the mode monotonically") {
    const double y = 0.8;
    const NormalPrior prior;
    // mode: location solves its own stationarity for fixed log-scale s, then
    // bisection on the log-scale partial derivative
    auto location = [&](double s) {
        const double prec = std::exp(-2.0 * s);
        return y * prec / (prec + 1.0 / (prior.loc_scale * prior.loc_scale));
    };
    auto ds = [&](double s) {
        const double r = y - location(s);
        return r * r * std::exp(-2.0 * s) - (prior.ig_shape + 1.0) + prior.ig_rate * std::exp(-s);
    };
    double lo = -20.0, hi = 5.0;
    for (int i = 0; i < 200; ++i) (ds(0.5 * (lo + hi)) > 0.0 ? lo : hi) = 0.5 * (lo + hi);
    Vector mode(2);
    mode << location(lo), lo;

    Matrix X(1, 1);
    X << 0.0;
    const auto targets = make_targets(TaskSpec{}, std::vector<double>{y});
    BoostConfig cfg;
    cfg.n_particles = 1;
    cfg.max_iterations = 100;
    cfg.init.fixed = Matrix::Constant(1, 2, 0.0);
    cfg.tree.max_depth = 5;
    std::vector<double> dist;
    fit(X, targets, cfg, [&](const FitProgress& p) {
        dist.push_back((p.train_outputs[0].row(0).transpose() - mode).norm());
    });
    for (std::size_t m = 1; m < dist.size(); ++m) CHECK(dist[m] < dist[m - 1]);
    CHECK(dist.back() < 0.01 * dist.front());
}

TEST_CASE("fits are deterministic for a seed and threads do not matter") {
    const SinData d = sin_data(50, 3);
    const auto targets = make_targets(TaskSpec{}, d.y);
    BoostConfig cfg = quick_config();
    cfg.subsample = 0.6;
    cfg.direction = Langevin{0.1};
    cfg.threads = 1;
    const std::string one = model_to_json(fit(d.X, targets, cfg)).dump();
    cfg.threads = 4;
    const std::string four = model_to_json(fit(d.X, targets, cfg)).dump();
    // thread counts are stored in the config snapshot; compare the rest
    CHECK(one.substr(one.find("\"ensembles\"")) == four.substr(four.find("\"ensembles\"")));
}

TEST_CASE("select_best_iteration picks the first minimum") {
    CHECK(select_best_iteration(std::vector<double>{3, 2, 1, 0.5}) == 3);
    CHECK(select_best_iteration(std::vector<double>{0.1, 2, 1}) == 0);
    CHECK(select_best_iteration(std::vector<double>{2, 1, 1, 3}) == 1);
    CHECK_THROWS_AS(select_best_iteration(std::vector<double>{}), ContractError);
}

TEST_CASE("early stopping refits with the selected count and is reproducible") {
    const SinData d = sin_data(60, 4);
    std::vector<double> y_std(d.y);
    const Standardization s = Standardization::fit(d.y);
    for (double& v : y_std) v = s.forward(v);
    BoostConfig cfg = quick_config();
    cfg.max_iterations = 30;
    const EarlyStoppingResult a = fit_with_early_stopping(d.X, y_std, TaskSpec{}, cfg);
    const EarlyStoppingResult b = fit_with_early_stopping(d.X, y_std, TaskSpec{}, cfg);
    CHECK(a.validation_nll.size() == 31);
    CHECK(a.train_nll.size() == 31);
    CHECK(a.best_iterations == select_best_iteration(a.validation_nll));
    CHECK(a.model.num_iterations() == a.best_iterations);
    CHECK(a.best_iterations == b.best_iterations);
    CHECK(model_to_json(a.model).dump() == model_to_json(b.model).dump());
    CHECK_THROWS_AS(fit_with_early_stopping(d.X.topRows(2), std::vector<double>{0.0, 1.0}, TaskSpec{}, cfg, 0.1), DataError);
}

TEST_CASE("categorical task learns separable classes") {
    Matrix X(40, 1);
    std::vector<double> labels(40);
    for (Index i = 0; i < 40; ++i) {
        X(i, 0) = static_cast<double>(i);
        labels[static_cast<std::size_t>(i)] = i < 20 ? 1.0 : 2.0;
    }
    TaskSpec task;
    task.family = TargetFamily::Categorical;
    task.num_classes = 2;
    BoostConfig cfg = quick_config();
    cfg.learning_rate = 0.4;
    cfg.max_iterations = 30;
    const WGBoostModel model = fit(X, make_targets(task, labels), cfg);
    CHECK(predict_class(model.predict_particles(Vector::Constant(1, 3.0)), 2) == 1);
    CHECK(predict_class(model.predict_particles(Vector::Constant(1, 35.0)), 2) == 2);
    CHECK(datum_nll(task, model.predict_particles(Vector::Constant(1, 35.0)), 2.0) < std::log(2.0));
}

TEST_CASE("boosting contract and config errors") {
    const SinData d = sin_data(10, 5);
    const auto targets = make_targets(TaskSpec{}, d.y);
    BoostConfig cfg = quick_config();
    CHECK_THROWS_AS(fit(d.X.topRows(5), targets, cfg), ContractError);
    cfg.subsample = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = quick_config();
    cfg.n_particles = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = quick_config();
    cfg.learning_rate = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    TaskSpec cat;
    cat.family = TargetFamily::Categorical;
    cat.num_classes = 3;
    CHECK_THROWS_AS(make_targets(cat, std::vector<double>{1.5}), DataError);
    const WGBoostModel model = fit(d.X, targets, quick_config());
    CHECK_THROWS_AS(model.predict_particles(Vector::Zero(3)), ContractError);
}

TEST_CASE("truncate keeps the leading trees") {
    const SinData d = sin_data(20, 6);
    WGBoostModel model = fit(d.X, make_targets(TaskSpec{}, d.y), quick_config());
    const ParticleSet staged = model.predict_particles(Vector::Constant(1, 0.5), 4);
    model.truncate(4);
    CHECK(model.num_iterations() == 4);
    CHECK(model.predict_particles(Vector::Constant(1, 0.5)) == staged);
}
