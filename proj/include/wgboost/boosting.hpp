#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgboost/direction.hpp"
#include "wgboost/eval.hpp"
#include "wgboost/kernel.hpp"
#include "wgboost/target.hpp"
#include "wgboost/tree.hpp"
#include "wgboost/types.hpp"

namespace wgboost {

struct InitConfig {
    double rate = 0.01;
    int steps = 5000;
    // When set, used verbatim as the initial particles instead of running the
    // averaged particle flow.
    std::optional<Matrix> fixed;
};

struct BoostConfig {
    int n_particles = 10;
    int max_iterations = 4000;
    double learning_rate = 0.1;
    DirectionKind direction = DiagNewton{};
    KernelConfig kernel{KernelConfig::kBoostingScale};
    TreeParams tree;
    double subsample = 1.0;
    InitConfig init;
    std::uint64_t seed = 0;
    std::size_t threads = 0; // 0 = available parallelism

    void validate() const;
    std::size_t worker_count() const;
};

enum class TargetFamily { Normal, Categorical, Gaussian };

std::string family_name(TargetFamily family);
TargetFamily parse_family(const std::string& name);

/// What kind of per-datum output distribution a task uses.
struct TaskSpec {
    TargetFamily family = TargetFamily::Normal;
    int num_classes = 0; // categorical only
    NormalPrior normal_prior;
    double categorical_prior_scale = CategoricalTarget::kDefaultPriorScale;
};

/// Builds one target per response. Regression responses must already be
/// standardised; classification responses are 1-based labels.
std::vector<TargetPtr> make_targets(const TaskSpec& task, std::span<const double> responses);

/// -log p(response | particles) under the task's response distribution, in
/// the units the targets were built in.
double datum_nll(const TaskSpec& task, const ParticleSet& particles, double response);

struct WGBoostModel {
    TargetFamily family = TargetFamily::Normal;
    int num_classes = 0;
    std::vector<double> class_labels;              // raw label of class j+1
    std::optional<Standardization> standardization; // regression only
    TaskSpec task;
    BoostConfig config;
    Index num_features = 0;
    std::vector<std::string> feature_names;         // optional, for schema checks
    Matrix init_particles;                          // N x d
    std::vector<std::vector<RegressionTree>> ensembles; // N sequences of equal length

    Index n_particles() const noexcept { return init_particles.rows(); }
    Index particle_dim() const noexcept { return init_particles.cols(); }
    std::size_t num_iterations() const noexcept { return ensembles.empty() ? 0 : ensembles.front().size(); }

    /// init + rate * sum of the first `stages` trees of each ensemble
    /// (all trees when unset).
    ParticleSet predict_particles(const VectorCRef& x, std::optional<std::size_t> stages = {}) const;
    /// One particle set per row of X.
    std::vector<ParticleSet> predict_batch(const Matrix& X, std::optional<std::size_t> stages = {}) const;

    /// Drops all trees beyond the first `stages`.
    void truncate(std::size_t stages);
};

/// Averaged particle flow from a seeded standard-normal draw: `steps`
/// updates of rate * mean_i direction_i at the shared particle set.
Matrix init_particles(std::span<const TargetPtr> targets, const BoostConfig& cfg);

struct FitProgress {
    std::size_t iteration;                    // trees per ensemble so far
    std::span<const RegressionTree> new_trees; // empty at iteration 0
    std::span<const ParticleSet> train_outputs;
};

using FitObserver = std::function<void(const FitProgress&)>;

/// Trains N parallel ensembles. `observer` is called once after
/// initialisation and after every iteration.
WGBoostModel fit(const Matrix& X, std::span<const TargetPtr> targets, const BoostConfig& cfg,
                 const FitObserver& observer = {});

/// Smallest index of the minimum.
std::size_t select_best_iteration(std::span<const double> curve);

struct EarlyStoppingResult {
    WGBoostModel model;
    std::vector<double> validation_nll; // index = number of trees
    std::vector<double> train_nll;      // on the fitting part of the split
    std::size_t best_iterations = 0;
};

/// Holds out `val_fraction` of the rows, records validation NLL at every
/// iteration up to cfg.max_iterations, then refits on all rows with the
/// arg-min iteration count.
EarlyStoppingResult fit_with_early_stopping(const Matrix& X, std::span<const double> responses,
                                            const TaskSpec& task, const BoostConfig& cfg,
                                            double val_fraction = 0.2);

} // namespace wgboost
