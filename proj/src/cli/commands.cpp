#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <set>

#include "wgboost/cli.hpp"
#include "wgboost/error.hpp"
#include "wgboost/model_io.hpp"

namespace wgboost::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Vector linspace(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("grid needs at least one point");
    if (n == 1) return Vector::Constant(1, 0.5 * (lo + hi));
    return Vector::LinSpaced(n, lo, hi);
}

struct Columns {
    std::vector<Index> features;
    Index label = -1;
};

Columns training_columns(const RunConfig& cfg, const CsvTable& table) {
    if (table.columns.size() < 2) throw DataError("training data needs at least one feature and a label column");
    Columns cols;
    cols.label = cfg.label.empty() ? static_cast<Index>(table.columns.size()) - 1 : table.column(cfg.label);
    if (cfg.features.empty()) {
        for (Index c = 0; c < static_cast<Index>(table.columns.size()); ++c) {
            if (c != cols.label) cols.features.push_back(c);
        }
    } else {
        for (const auto& name : cfg.features) {
            const Index c = table.column(name);
            if (c == cols.label) throw ConfigError("label column '" + name + "' listed as a feature");
            cols.features.push_back(c);
        }
    }
    return cols;
}

Matrix select_columns(const CsvTable& table, std::span<const Index> cols) {
    Matrix X(table.values.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) X.col(static_cast<Index>(j)) = table.values.col(cols[j]);
    return X;
}

Matrix model_features(const WGBoostModel& model, const CsvTable& table, std::optional<Index> label_col) {
    std::vector<Index> cols;
    if (!model.feature_names.empty()) {
        for (const auto& name : model.feature_names) {
            const auto it = std::find(table.columns.begin(), table.columns.end(), name);
            if (it == table.columns.end()) throw DataError("schema mismatch: feature column '" + name + "' missing");
            cols.push_back(static_cast<Index>(it - table.columns.begin()));
        }
    } else {
        for (Index c = 0; c < static_cast<Index>(table.columns.size()); ++c) {
            if (!label_col || c != *label_col) cols.push_back(c);
        }
        if (static_cast<Index>(cols.size()) != model.num_features) {
            throw DataError("schema mismatch: model expects " + std::to_string(model.num_features) + " features, data has " +
                            std::to_string(cols.size()));
        }
    }
    return select_columns(table, cols);
}

std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

int class_index(const WGBoostModel& model, double label) {
    const auto it = std::find(model.class_labels.begin(), model.class_labels.end(), label);
    return it == model.class_labels.end() ? 0 : static_cast<int>(it - model.class_labels.begin()) + 1;
}

void add_meta(CsvWriter& w, std::uint64_t seed) {
    w.set_meta("seed", std::to_string(seed));
    w.set_meta("format_version", std::to_string(kModelFormatVersion));
}

CsvWriter prediction_writer(const WGBoostModel& model, bool with_label) {
    std::vector<std::string> header;
    if (with_label) header.emplace_back("label");
    if (model.family == TargetFamily::Categorical) {
        header.emplace_back("predicted_label");
        for (double c : model.class_labels) header.push_back("prob_" + format_double(c));
        header.emplace_back("ood_score");
    } else {
        header.insert(header.end(), {"mean", "lower_95", "upper_95"});
        for (Index n = 0; n < model.n_particles(); ++n) {
            header.push_back("loc_" + std::to_string(n + 1));
            header.push_back("scale_" + std::to_string(n + 1));
        }
    }
    CsvWriter w(std::move(header));
    add_meta(w, model.config.seed);
    if (model.family == TargetFamily::Categorical) w.set_meta("ood_variance_floor", format_double(kOodVarianceFloor));
    return w;
}

std::vector<std::string> prediction_fields(const WGBoostModel& model, const ParticleSet& particles) {
    std::vector<std::string> fields;
    if (model.family == TargetFamily::Categorical) {
        const Vector probs = predictive_class_probs(particles, model.num_classes);
        fields.push_back(format_double(model.class_labels[static_cast<std::size_t>(predict_class(particles, model.num_classes) - 1)]));
        for (Index j = 0; j < probs.size(); ++j) fields.push_back(format_double(probs[j]));
        fields.push_back(particles.rows() >= 2 ? format_double(ood_score(particles, model.num_classes)) : "");
    } else {
        const Standardization& s = *model.standardization;
        fields.push_back(format_double(s.inverse(point_predict_normal(particles))));
        fields.push_back(format_double(s.inverse(predictive_quantile_normal(particles, 0.025))));
        fields.push_back(format_double(s.inverse(predictive_quantile_normal(particles, 0.975))));
        for (Index n = 0; n < particles.rows(); ++n) {
            fields.push_back(format_double(s.inverse(particles(n, 0))));
            fields.push_back(format_double(s.y_std * std::exp(particles(n, 1))));
        }
    }
    return fields;
}

void check_regression_model(const WGBoostModel& model) {
    if (model.family == TargetFamily::Normal && !model.standardization) {
        throw DataError("regression model lacks its standardisation record");
    }
    if (model.family == TargetFamily::Gaussian) throw DataError("model was trained on fixed gaussian targets");
}

} // namespace

WGBoostModel train_model(const RunConfig& cfg, const CsvTable& table, std::vector<std::vector<std::string>>* log_rows) {
    const Columns cols = training_columns(cfg, table);
    if (table.values.rows() == 0) throw DataError("training data has no rows");
    const Matrix X = select_columns(table, cols.features);
    const Vector y_raw = table.values.col(cols.label);

    TaskSpec task;
    std::vector<double> responses(static_cast<std::size_t>(y_raw.size()));
    std::optional<Standardization> standardization;
    std::vector<double> class_labels;
    if (cfg.task == Task::Regression) {
        task.family = TargetFamily::Normal;
        task.normal_prior = cfg.normal_prior;
        standardization = Standardization::fit(to_vector(y_raw));
        for (Index i = 0; i < y_raw.size(); ++i) responses[static_cast<std::size_t>(i)] = standardization->forward(y_raw[i]);
    } else {
        std::set<double> distinct;
        for (Index i = 0; i < y_raw.size(); ++i) {
            if (y_raw[i] != std::round(y_raw[i])) {
                throw DataError("class label " + format_double(y_raw[i]) + " on data row " + std::to_string(i + 1) +
                                " is not an integer");
            }
            distinct.insert(y_raw[i]);
        }
        if (distinct.size() < 2) throw DataError("classification needs at least two classes");
        class_labels.assign(distinct.begin(), distinct.end());
        task.family = TargetFamily::Categorical;
        task.num_classes = static_cast<int>(class_labels.size());
        task.categorical_prior_scale = cfg.categorical_prior_scale;
        for (Index i = 0; i < y_raw.size(); ++i) {
            const auto it = std::lower_bound(class_labels.begin(), class_labels.end(), y_raw[i]);
            responses[static_cast<std::size_t>(i)] = static_cast<double>(it - class_labels.begin() + 1);
        }
    }

    WGBoostModel model;
    if (cfg.early_stopping) {
        EarlyStoppingResult r = fit_with_early_stopping(X, responses, task, cfg.boost, cfg.val_fraction);
        if (log_rows) {
            for (std::size_t m = 0; m < r.validation_nll.size(); ++m) {
                log_rows->push_back({"validation", std::to_string(m), format_double(r.train_nll[m]),
                                     format_double(r.validation_nll[m])});
            }
        }
        model = std::move(r.model);
    } else {
        const auto targets = make_targets(task, responses);
        FitObserver observer;
        if (log_rows) {
            observer = [&](const FitProgress& p) {
                double total = 0.0;
                for (std::size_t i = 0; i < p.train_outputs.size(); ++i) total += datum_nll(task, p.train_outputs[i], responses[i]);
                log_rows->push_back({"fit", std::to_string(p.iteration),
                                     format_double(total / static_cast<double>(p.train_outputs.size())), ""});
            };
        }
        model = fit(X, targets, cfg.boost, observer);
    }
    model.family = task.family;
    model.num_classes = task.num_classes;
    model.task = task;
    model.class_labels = std::move(class_labels);
    model.standardization = standardization;
    for (Index c : cols.features) model.feature_names.push_back(table.columns[static_cast<std::size_t>(c)]);
    return model;
}

TrainResult cmd_train(const RunConfig& cfg) {
    if (!fs::exists(cfg.train_csv)) throw ConfigError("training file " + cfg.train_csv.string() + " does not exist");
    if (cfg.test_csv && !fs::exists(*cfg.test_csv)) {
        throw ConfigError("test file " + cfg.test_csv->string() + " does not exist");
    }
    const CsvTable table = read_csv(cfg.train_csv);
    std::optional<CsvTable> test;
    if (cfg.test_csv) test = read_csv(*cfg.test_csv);

    std::vector<std::vector<std::string>> log_rows;
    const auto start = Clock::now();
    TrainResult result;
    result.model = train_model(cfg, table, &log_rows);
    const double wall = seconds_since(start);
    result.best_iterations = result.model.num_iterations();

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw DataError("cannot create output directory " + cfg.output_dir.string());

    result.model_path = cfg.output_dir / "model.json";
    result.log_path = cfg.output_dir / "train_log.csv";
    save_model(result.model, result.model_path);
    CsvWriter log({"phase", "iteration", "train_nll", "val_nll"});
    for (auto& row : log_rows) log.add_row(std::move(row));
    add_meta(log, cfg.boost.seed);
    log.set_meta("selected_iterations", std::to_string(result.best_iterations));
    log.write(result.log_path);

    if (test) {
        const std::string label = cfg.label.empty() ? table.columns.back() : cfg.label;
        Metrics m = evaluate_model(result.model, *test, label);
        m.dataset = cfg.dataset;
        m.wall_clock_s = wall;
        result.metrics_path = cfg.output_dir / "metrics.csv";
        metrics_writer(std::span<const Metrics>(&m, 1), cfg.boost.seed).write(*result.metrics_path);
    }
    return result;
}

Metrics evaluate_model(const WGBoostModel& model, const CsvTable& table, const std::string& label, CsvWriter* rows) {
    check_regression_model(model);
    const Index label_col = table.column(label);
    const Matrix X = model_features(model, table, label_col);
    if (X.rows() == 0) throw DataError("evaluation data has no rows");
    const Vector y = table.values.col(label_col);
    const auto particles = model.predict_batch(X);

    Metrics m;
    m.seed = model.config.seed;
    m.iterations = model.num_iterations();
    if (rows) *rows = prediction_writer(model, true);

    if (model.family == TargetFamily::Normal) {
        const auto yv = to_vector(y);
        m.nll = predictive_nll_normal(particles, yv, *model.standardization);
        m.rmse = point_predict_rmse(particles, yv, *model.standardization);
    } else {
        std::vector<double> scores;
        std::vector<char> in_dist;
        std::size_t correct = 0;
        std::size_t known = 0;
        for (std::size_t i = 0; i < particles.size(); ++i) {
            const int cls = class_index(model, y[static_cast<Index>(i)]);
            if (cls > 0) {
                ++known;
                if (predict_class(particles[i], model.num_classes) == cls) ++correct;
            }
            if (model.n_particles() >= 2) scores.push_back(ood_score(particles[i], model.num_classes));
            in_dist.push_back(cls > 0 ? 1 : 0);
        }
        m.n_ood = particles.size() - known;
        if (known > 0) m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(known);
        if (known > 0 && m.n_ood > 0 && !scores.empty()) {
            auto flags = std::make_unique<bool[]>(in_dist.size());
            std::copy(in_dist.begin(), in_dist.end(), flags.get());
            m.pr_auc = 100.0 * pr_auc(scores, std::span<const bool>(flags.get(), in_dist.size()));
        }
    }
    if (rows) {
        for (std::size_t i = 0; i < particles.size(); ++i) {
            auto fields = prediction_fields(model, particles[i]);
            fields.insert(fields.begin(), format_double(y[static_cast<Index>(i)]));
            rows->add_row(std::move(fields));
        }
    }
    return m;
}

CsvWriter metrics_writer(std::span<const Metrics> metrics, std::uint64_t seed) {
    CsvWriter w({"dataset", "seed", "M", "NLL", "RMSE", "accuracy", "pr_auc", "mean_mmd", "wall_clock_s"});
    bool classification = false;
    for (const Metrics& m : metrics) {
        classification = classification || m.accuracy.has_value();
        w.add_row({m.dataset, std::to_string(m.seed), std::to_string(m.iterations), optional_number(m.nll),
                   optional_number(m.rmse), optional_number(m.accuracy), optional_number(m.pr_auc),
                   optional_number(m.mean_mmd), format_double(m.wall_clock_s)});
    }
    add_meta(w, seed);
    if (classification) w.set_meta("ood_variance_floor", format_double(kOodVarianceFloor));
    return w;
}

void cmd_evaluate(const fs::path& model_path, const fs::path& data_path, const std::string& label,
                  const fs::path& metrics_path, const std::optional<fs::path>& rows_path) {
    const WGBoostModel model = load_model(model_path);
    const CsvTable table = read_csv(data_path);
    const std::string label_name = label.empty() ? table.columns.back() : label;
    CsvWriter rows({});
    const auto start = Clock::now();
    Metrics m = evaluate_model(model, table, label_name, rows_path ? &rows : nullptr);
    m.wall_clock_s = seconds_since(start);
    m.dataset = data_path.stem().string();
    const CsvWriter w = metrics_writer(std::span<const Metrics>(&m, 1), model.config.seed);
    if (rows_path) rows.write(*rows_path);
    w.write(metrics_path);
}

void cmd_predict(const fs::path& model_path, const fs::path& data_path, const fs::path& out_path) {
    const WGBoostModel model = load_model(model_path);
    check_regression_model(model);
    const CsvTable table = read_csv(data_path);
    std::optional<Index> extra;
    if (model.feature_names.empty() && static_cast<Index>(table.columns.size()) == model.num_features + 1) {
        extra = static_cast<Index>(table.columns.size()) - 1; // trailing label column
    }
    const Matrix X = model_features(model, table, extra);
    const auto particles = model.predict_batch(X);
    CsvWriter w = prediction_writer(model, false);
    for (const auto& p : particles) w.add_row(prediction_fields(model, p));
    w.write(out_path);
}

std::vector<BenchRow> run_bench_directions(const BenchOptions& opts) {
    if (opts.checkpoints.empty()) throw ConfigError("bench needs at least one checkpoint");
    if (!(opts.noise_variance > 0.0)) throw ConfigError("noise variance must be positive");
    const int max_m = *std::max_element(opts.checkpoints.begin(), opts.checkpoints.end());
    const Vector x_train = linspace(-3.5, 3.5, opts.train_points);
    const Vector x_eval = linspace(-3.5, 3.5, opts.eval_points);
    const double sd = std::sqrt(opts.noise_variance);

    std::vector<TargetPtr> targets;
    for (Index i = 0; i < x_train.size(); ++i) {
        targets.push_back(std::make_shared<GaussianTarget>(Vector::Constant(1, std::sin(x_train[i])), opts.noise_variance));
    }
    const Matrix X = x_train;
    const Matrix X_eval = x_eval;
    const KernelConfig mmd_kernel(KernelConfig::kMmdScale);

    std::vector<BenchRow> rows;
    for (const DirectionKind& kind : opts.directions) {
        BoostConfig cfg;
        cfg.n_particles = opts.n_particles;
        cfg.max_iterations = max_m;
        cfg.learning_rate = opts.learning_rate;
        cfg.direction = kind;
        cfg.tree.max_depth = opts.max_depth;
        cfg.init.fixed = Matrix(linspace(-10.0, 10.0, opts.n_particles));
        cfg.seed = opts.seed;
        cfg.threads = opts.threads;

        std::vector<ParticleSet> eval_outputs;
        double excluded = 0.0;
        Clock::time_point start;
        auto observer = [&](const FitProgress& p) {
            const auto t0 = Clock::now();
            const double elapsed = std::chrono::duration<double>(t0 - start).count() - excluded;
            if (p.iteration == 0) {
                eval_outputs.assign(static_cast<std::size_t>(X_eval.rows()), *cfg.init.fixed);
            } else {
                for (std::size_t n = 0; n < p.new_trees.size(); ++n) {
                    const RegressionTree& tree = p.new_trees[n];
                    for (Index i = 0; i < X_eval.rows(); ++i) {
                        const Index leaf = tree.leaf_for(X_eval.row(i));
                        eval_outputs[static_cast<std::size_t>(i)](static_cast<Index>(n), 0) +=
                            cfg.learning_rate * tree.leaf_values()(leaf, 0);
                    }
                }
            }
            const int m = static_cast<int>(p.iteration);
            if (std::find(opts.checkpoints.begin(), opts.checkpoints.end(), m) != opts.checkpoints.end()) {
                double total = 0.0;
                for (Index i = 0; i < X_eval.rows(); ++i) {
                    total += mmd_squared(eval_outputs[static_cast<std::size_t>(i)], Normal1D{std::sin(x_eval[i]), sd},
                                         mmd_kernel);
                }
                rows.push_back({direction_name(kind), m, total / static_cast<double>(X_eval.rows()), elapsed});
            }
            excluded += seconds_since(t0);
        };
        start = Clock::now();
        fit(X, targets, cfg, observer);
    }
    return rows;
}

CsvWriter bench_writer(std::span<const BenchRow> rows, std::uint64_t seed) {
    CsvWriter w({"direction", "M", "mean_mmd", "wall_clock_s"});
    for (const BenchRow& r : rows) {
        w.add_row({r.direction, std::to_string(r.iterations), format_double(r.mean_mmd), format_double(r.wall_clock_s)});
    }
    add_meta(w, seed);
    w.set_meta("mmd_kernel_scale", format_double(KernelConfig::kMmdScale));
    return w;
}

CsvWriter toy_sin_table(const ToySinOptions& opts) {
    if (!(opts.noise_variance > 0.0)) throw ConfigError("noise variance must be positive");
    const Vector x_train = linspace(-3.5, 3.5, opts.train_points);
    std::vector<TargetPtr> targets;
    for (Index i = 0; i < x_train.size(); ++i) {
        targets.push_back(std::make_shared<GaussianTarget>(Vector::Constant(1, std::sin(x_train[i])), opts.noise_variance));
    }
    BoostConfig cfg;
    cfg.n_particles = opts.n_particles;
    cfg.max_iterations = opts.max_iterations;
    cfg.learning_rate = opts.learning_rate;
    cfg.direction = opts.direction;
    cfg.tree.max_depth = opts.max_depth;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    const WGBoostModel model = fit(Matrix(x_train), targets, cfg);

    std::vector<std::string> header{"x"};
    for (int n = 0; n < opts.n_particles; ++n) header.push_back("particle_" + std::to_string(n + 1));
    header.insert(header.end(), {"target_mean", "band_lower", "band_upper"});
    CsvWriter w(std::move(header));
    const double half_width = 1.96 * std::sqrt(opts.noise_variance);
    const Vector grid = linspace(-3.5, 3.5, opts.grid_points);
    for (Index g = 0; g < grid.size(); ++g) {
        const ParticleSet p = model.predict_particles(Vector(Vector::Constant(1, grid[g])));
        std::vector<std::string> fields{format_double(grid[g])};
        for (Index n = 0; n < p.rows(); ++n) fields.push_back(format_double(p(n, 0)));
        const double mean = std::sin(grid[g]);
        fields.insert(fields.end(), {format_double(mean), format_double(mean - half_width), format_double(mean + half_width)});
        w.add_row(std::move(fields));
    }
    add_meta(w, opts.seed);
    return w;
}

} // namespace wgboost::cli
