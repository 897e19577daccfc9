#include "wgboost/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wgboost/error.hpp"
#include "wgboost/parallel.hpp"

namespace wgboost {

void BoostConfig::validate() const {
    if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
    if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
    if (!(init.rate > 0.0)) throw ConfigError("init rate must be positive");
    if (init.steps < 0) throw ConfigError("init steps must be >= 0");
    if (init.fixed && (init.fixed->rows() != n_particles || !init.fixed->allFinite())) {
        throw ConfigError("fixed initial particles must have n_particles finite rows");
    }
    if (const auto* l = std::get_if<Langevin>(&direction); l && !(l->rate > 0.0)) {
        throw ConfigError("langevin rate must be positive");
    }
    tree.validate();
}

std::size_t BoostConfig::worker_count() const { return threads == 0 ? default_thread_count() : threads; }

std::string family_name(TargetFamily family) {
    switch (family) {
    case TargetFamily::Normal: return "normal";
    case TargetFamily::Categorical: return "categorical";
    case TargetFamily::Gaussian: return "gaussian";
    }
    return "unknown";
}

TargetFamily parse_family(const std::string& name) {
    if (name == "normal") return TargetFamily::Normal;
    if (name == "categorical") return TargetFamily::Categorical;
    if (name == "gaussian") return TargetFamily::Gaussian;
    throw DataError("unknown target family '" + name + "'");
}

std::vector<TargetPtr> make_targets(const TaskSpec& task, std::span<const double> responses) {
    std::vector<TargetPtr> out;
    out.reserve(responses.size());
    for (double y : responses) {
        switch (task.family) {
        case TargetFamily::Normal:
            out.push_back(std::make_shared<NormalLocationScaleTarget>(y, task.normal_prior));
            break;
        case TargetFamily::Categorical: {
            const double rounded = std::round(y);
            if (rounded != y) throw DataError("class label " + std::to_string(y) + " is not an integer");
            out.push_back(std::make_shared<CategoricalTarget>(static_cast<int>(rounded), task.num_classes,
                                                              task.categorical_prior_scale));
            break;
        }
        case TargetFamily::Gaussian:
            throw ContractError("gaussian targets are built directly, not from responses");
        }
    }
    return out;
}

double datum_nll(const TaskSpec& task, const ParticleSet& particles, double response) {
    switch (task.family) {
    case TargetFamily::Normal: return -log_predictive_normal(particles, response);
    case TargetFamily::Categorical: {
        const Vector probs = predictive_class_probs(particles, task.num_classes);
        const auto label = static_cast<Index>(std::lround(response));
        if (label < 1 || label > task.num_classes) throw DataError("label outside the model's classes");
        return -std::log(probs[label - 1]);
    }
    case TargetFamily::Gaussian: break;
    }
    throw ContractError("no response likelihood for gaussian targets");
}

namespace {

// The single accumulation used by both the training cache and prediction so
// that staged values agree bit for bit.
inline void add_tree_output(ParticleSet& particles, Index n, const RegressionTree& tree, Index leaf, double rate) {
    const Matrix& values = tree.leaf_values();
    for (Index c = 0; c < particles.cols(); ++c) particles(n, c) += rate * values(leaf, c);
}

Index common_dim(std::span<const TargetPtr> targets) {
    if (targets.empty()) throw DataError("no training targets");
    const Index d = targets.front()->dim();
    for (const auto& t : targets) {
        if (!t) throw ContractError("null target");
        if (t->dim() != d) throw ContractError("targets disagree on particle dimension");
    }
    return d;
}

std::string where(std::size_t iteration, std::size_t datum) {
    return " (iteration " + std::to_string(iteration) + ", datum " + std::to_string(datum) + ")";
}

// Re-throws a library error with its position in the training loop appended.
[[noreturn]] void rethrow_located(const std::string& location) {
    try {
        throw;
    } catch (const NumericError& e) {
        throw NumericError(e.what() + location);
    } catch (const ContractError& e) {
        throw ContractError(e.what() + location);
    } catch (const DataError& e) {
        throw DataError(e.what() + location);
    }
}

} // namespace

ParticleSet WGBoostModel::predict_particles(const VectorCRef& x, std::optional<std::size_t> stages) const {
    if (x.size() != num_features) {
        throw ContractError("model expects " + std::to_string(num_features) + " features, got " +
                            std::to_string(x.size()));
    }
    const std::size_t use = std::min(stages.value_or(num_iterations()), num_iterations());
    ParticleSet out = init_particles;
    const double rate = config.learning_rate;
    for (Index n = 0; n < n_particles(); ++n) {
        const auto& trees = ensembles[static_cast<std::size_t>(n)];
        for (std::size_t m = 0; m < use; ++m) add_tree_output(out, n, trees[m], trees[m].leaf_for(x), rate);
    }
    return out;
}

std::vector<ParticleSet> WGBoostModel::predict_batch(const Matrix& X, std::optional<std::size_t> stages) const {
    if (X.cols() != num_features) {
        throw ContractError("model expects " + std::to_string(num_features) + " features, got " +
                            std::to_string(X.cols()));
    }
    std::vector<ParticleSet> out(static_cast<std::size_t>(X.rows()));
    parallel_for(out.size(), config.worker_count(), [&](std::size_t i) {
        const Vector x = X.row(static_cast<Index>(i)).transpose();
        out[i] = predict_particles(x, stages);
    });
    return out;
}

void WGBoostModel::truncate(std::size_t stages) {
    for (auto& trees : ensembles) {
        if (trees.size() > stages) trees.resize(stages);
    }
    config.max_iterations = static_cast<int>(num_iterations());
}

Matrix init_particles(std::span<const TargetPtr> targets, const BoostConfig& cfg) {
    cfg.validate();
    const Index d = common_dim(targets);
    const Index n_particles = cfg.n_particles;
    if (cfg.init.fixed) {
        if (cfg.init.fixed->cols() != d) throw ConfigError("fixed initial particles have the wrong dimension");
        return *cfg.init.fixed;
    }

    Rng rng = make_rng(cfg.seed, Stream::Init);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix particles(n_particles, d);
    for (Index n = 0; n < n_particles; ++n) {
        for (Index c = 0; c < d; ++c) particles(n, c) = normal(rng);
    }

    DirectionKind kind = cfg.direction;
    if (std::holds_alternative<Langevin>(kind)) kind = Langevin{cfg.init.rate};

    const std::size_t n_data = targets.size();
    const std::size_t workers = cfg.worker_count();
    std::vector<Matrix> directions(n_data);
    for (int step = 0; step < cfg.init.steps; ++step) {
        parallel_for(n_data, workers, [&](std::size_t i) {
            Rng noise = make_rng(cfg.seed, Stream::Init, static_cast<std::uint64_t>(step) + 1, i);
            try {
                directions[i] = compute_direction(kind, particles, *targets[i], cfg.kernel, &noise, i);
            } catch (const Error&) {
                rethrow_located(" (initialisation step " + std::to_string(step) + ", datum " + std::to_string(i) + ")");
            }
        });
        Matrix mean = Matrix::Zero(n_particles, d);
        for (const Matrix& dir : directions) mean += dir;
        mean /= static_cast<double>(n_data);
        particles += cfg.init.rate * mean;
        if (!particles.allFinite()) {
            throw NumericError("initial particle flow produced non-finite values at step " + std::to_string(step));
        }
    }
    return particles;
}

WGBoostModel fit(const Matrix& X, std::span<const TargetPtr> targets, const BoostConfig& cfg,
                 const FitObserver& observer) {
    cfg.validate();
    const Index d = common_dim(targets);
    const auto n_data = static_cast<std::size_t>(X.rows());
    if (targets.size() != n_data) {
        throw ContractError("feature rows (" + std::to_string(n_data) + ") and targets (" +
                            std::to_string(targets.size()) + ") differ");
    }
    if (!X.allFinite()) throw DataError("feature matrix contains non-finite values");

    const Index n_particles = cfg.n_particles;
    const auto n_ensembles = static_cast<std::size_t>(n_particles);
    const std::size_t workers = cfg.worker_count();

    WGBoostModel model;
    model.config = cfg;
    model.num_features = X.cols();
    model.init_particles = init_particles(targets, cfg);
    model.ensembles.assign(n_ensembles, {});
    for (auto& e : model.ensembles) e.reserve(static_cast<std::size_t>(cfg.max_iterations));

    std::vector<ParticleSet> outputs(n_data, model.init_particles);
    if (observer) observer(FitProgress{0, {}, outputs});

    const TreeFitter fitter(X);
    const auto subsample_size =
        static_cast<std::size_t>(std::ceil(cfg.subsample * static_cast<double>(n_data) - 1e-9));
    std::vector<Index> all_rows(n_data);
    std::iota(all_rows.begin(), all_rows.end(), Index{0});
    std::vector<Index> rows;
    std::vector<Matrix> directions(n_data);
    std::vector<Matrix> tree_targets(n_ensembles, Matrix::Zero(X.rows(), d));
    std::vector<RegressionTree> new_trees(n_ensembles);
    std::vector<Index> leaves(n_data);

    for (int m = 0; m < cfg.max_iterations; ++m) {
        const auto iteration = static_cast<std::size_t>(m);
        if (subsample_size < n_data) {
            std::vector<Index> perm = all_rows;
            Rng rng = make_rng(cfg.seed, Stream::Subsample, iteration);
            for (std::size_t i = 0; i < subsample_size; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n_data - 1);
                std::swap(perm[i], perm[pick(rng)]);
            }
            rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(subsample_size));
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows;
        }

        parallel_for(rows.size(), workers, [&](std::size_t j) {
            const auto i = static_cast<std::size_t>(rows[j]);
            Rng noise = make_rng(cfg.seed, Stream::Langevin, iteration, i);
            try {
                directions[i] = compute_direction(cfg.direction, outputs[i], *targets[i], cfg.kernel, &noise, i);
            } catch (const Error&) {
                rethrow_located(where(iteration, i));
            }
        });

        parallel_for(n_ensembles, workers, [&](std::size_t n) {
            Matrix& y = tree_targets[n];
            for (Index r : rows) y.row(r) = directions[static_cast<std::size_t>(r)].row(static_cast<Index>(n));
            new_trees[n] = fitter.fit(y, rows, cfg.tree);
        });

        for (std::size_t n = 0; n < n_ensembles; ++n) {
            const RegressionTree& tree = new_trees[n];
            for (std::size_t i = 0; i < n_data; ++i) leaves[i] = tree.leaf_for(X.row(static_cast<Index>(i)));
            for (std::size_t i = 0; i < n_data; ++i) {
                add_tree_output(outputs[i], static_cast<Index>(n), tree, leaves[i], cfg.learning_rate);
            }
            model.ensembles[n].push_back(tree);
        }
        for (std::size_t i = 0; i < n_data; ++i) {
            if (!outputs[i].allFinite()) {
                throw NumericError("boosting outputs became non-finite" + where(iteration, i));
            }
        }
        if (observer) observer(FitProgress{iteration + 1, new_trees, outputs});
    }
    return model;
}

std::size_t select_best_iteration(std::span<const double> curve) {
    if (curve.empty()) throw ContractError("empty validation curve");
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i] < curve[best]) best = i;
    }
    return best;
}

EarlyStoppingResult fit_with_early_stopping(const Matrix& X, std::span<const double> responses, const TaskSpec& task,
                                            const BoostConfig& cfg, double val_fraction) {
    cfg.validate();
    const auto n_data = static_cast<std::size_t>(X.rows());
    if (responses.size() != n_data) throw ContractError("feature rows and responses differ");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
    const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(n_data)));
    if (n_val == 0 || n_val >= n_data) {
        throw DataError("validation split of " + std::to_string(n_data) + " rows leaves an empty part");
    }

    std::vector<Index> perm(n_data);
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng = make_rng(cfg.seed, Stream::ValidationSplit);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Index> val_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<Index> fit_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(fit_rows.begin(), fit_rows.end());

    auto take = [&](const std::vector<Index>& idx, Matrix& x_out, std::vector<double>& y_out) {
        x_out.resize(static_cast<Index>(idx.size()), X.cols());
        y_out.resize(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            x_out.row(static_cast<Index>(j)) = X.row(idx[j]);
            y_out[j] = responses[static_cast<std::size_t>(idx[j])];
        }
    };
    Matrix x_fit, x_val;
    std::vector<double> y_fit, y_val;
    take(fit_rows, x_fit, y_fit);
    take(val_rows, x_val, y_val);

    EarlyStoppingResult result;
    std::vector<ParticleSet> val_outputs;
    const double rate = cfg.learning_rate;
    auto observer = [&](const FitProgress& progress) {
        if (progress.iteration == 0) {
            val_outputs.assign(n_val, progress.train_outputs.front());
            // train_outputs all equal the initial particles at iteration 0
        } else {
            for (std::size_t n = 0; n < progress.new_trees.size(); ++n) {
                const RegressionTree& tree = progress.new_trees[n];
                for (std::size_t j = 0; j < n_val; ++j) {
                    add_tree_output(val_outputs[j], static_cast<Index>(n), tree,
                                    tree.leaf_for(x_val.row(static_cast<Index>(j))), rate);
                }
            }
        }
        double val = 0.0;
        for (std::size_t j = 0; j < n_val; ++j) val += datum_nll(task, val_outputs[j], y_val[j]);
        double train = 0.0;
        for (std::size_t j = 0; j < progress.train_outputs.size(); ++j) {
            train += datum_nll(task, progress.train_outputs[j], y_fit[j]);
        }
        result.validation_nll.push_back(val / static_cast<double>(n_val));
        result.train_nll.push_back(train / static_cast<double>(progress.train_outputs.size()));
    };

    const auto fit_targets = make_targets(task, y_fit);
    fit(x_fit, fit_targets, cfg, observer);

    result.best_iterations = select_best_iteration(result.validation_nll);
    BoostConfig final_cfg = cfg;
    final_cfg.max_iterations = static_cast<int>(result.best_iterations);
    const auto all_targets = make_targets(task, responses);
    result.model = fit(X, all_targets, final_cfg);
    result.model.task = task;
    result.model.family = task.family;
    result.model.num_classes = task.num_classes;
    return result;
}

} // namespace wgboost
