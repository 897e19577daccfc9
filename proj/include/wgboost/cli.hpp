#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgboost/boosting.hpp"

namespace wgboost::cli {

namespace fs = std::filesystem;

// ---- data ----

struct CsvTable {
    std::vector<std::string> columns;
    Matrix values; // rows x columns

    /// Position of a named column; DataError if absent.
    Index column(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. Blank lines and lines
/// starting with '#' are skipped. Every field must parse as a number.
CsvTable read_csv(const fs::path& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "<memory>");

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Accumulates a CSV document ending in one '# key=value,...' metadata line.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(std::vector<std::string> fields);
    void set_meta(const std::string& key, const std::string& value);

    std::size_t num_rows() const noexcept { return rows_.size(); }
    std::string str() const;
    void write(const fs::path& path) const; // atomic

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::pair<std::string, std::string>> meta_;
};

/// Row indices of a seeded random split: `fraction` of rows go to `second`.
struct Split {
    std::vector<Index> first;
    std::vector<Index> second;
};
Split random_split(Index n_rows, double fraction, std::uint64_t seed, Stream stream);

Matrix take_rows(const Matrix& m, std::span<const Index> rows);

// ---- configuration ----

enum class Task { Regression, Classification };

std::string task_name(Task task);

/// Learning rate used when neither the config nor a flag sets one.
double default_learning_rate(Task task);

struct RunConfig {
    Task task = Task::Regression;
    fs::path train_csv;
    std::optional<fs::path> test_csv;
    std::string label;                 // empty: last column
    std::vector<std::string> features; // empty: every column except the label
    fs::path output_dir = ".";
    std::string dataset;               // name written to metrics; defaults to the train file stem
    bool early_stopping = false;
    double val_fraction = 0.2;
    BoostConfig boost;
    bool learning_rate_set = false;
    bool seed_set = false;
    bool langevin_rate_set = false; // otherwise the Langevin rate follows the learning rate
    NormalPrior normal_prior;
    double categorical_prior_scale = CategoricalTarget::kDefaultPriorScale;
};

/// Relative paths resolve against `base_dir`. Unknown keys are a ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir);
RunConfig load_run_config(const fs::path& path);

struct Overrides {
    std::optional<int> n_particles;
    std::optional<int> max_iterations;
    std::optional<int> max_depth;
    std::optional<double> learning_rate;
    std::optional<double> subsample;
    std::optional<std::string> direction;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

/// Applies flag overrides, then fills the task-dependent learning rate and
/// the WGBOOST_SEED fallback when still unset.
void finalize_config(RunConfig& cfg, const Overrides& overrides = {});

/// Parses WGBOOST_SEED if set; ConfigError when it is not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

// ---- commands ----

struct TrainResult {
    WGBoostModel model;
    fs::path model_path;
    fs::path log_path;
    std::optional<fs::path> metrics_path;
    std::size_t best_iterations = 0;
};

/// Fits on train_csv, writes model.json and train_log.csv into output_dir,
/// and metrics.csv when a test file is configured.
TrainResult cmd_train(const RunConfig& cfg);

/// Fits a model on an in-memory table without touching the filesystem.
WGBoostModel train_model(const RunConfig& cfg, const CsvTable& table, std::vector<std::vector<std::string>>* log_rows = nullptr);

struct Metrics {
    std::string dataset;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    std::optional<double> nll;
    std::optional<double> rmse;
    std::optional<double> accuracy; // percent, in-distribution rows only
    std::optional<double> pr_auc;   // percent, needs both in- and out-of-distribution rows
    std::optional<double> mean_mmd;
    double wall_clock_s = 0.0;
    std::size_t n_ood = 0;
};

/// Scores a model on a table holding its feature columns and a label column.
/// Classification rows whose label the model never saw count as OOD.
/// When `rows` is given, per-row predictions are appended to it.
Metrics evaluate_model(const WGBoostModel& model, const CsvTable& table, const std::string& label,
                       CsvWriter* rows = nullptr);

CsvWriter metrics_writer(std::span<const Metrics> metrics, std::uint64_t seed);

void cmd_evaluate(const fs::path& model_path, const fs::path& data_path, const std::string& label,
                  const fs::path& metrics_path, const std::optional<fs::path>& rows_path);

/// Writes per-row predictions (particles plus summaries) for every row.
void cmd_predict(const fs::path& model_path, const fs::path& data_path, const fs::path& out_path);

struct BenchOptions {
    std::vector<DirectionKind> directions{FirstOrder{}, DiagNewton{}, FullNewton{}, Langevin{0.1}};
    std::vector<int> checkpoints{0, 1, 2, 5, 10, 20, 50, 100};
    int n_particles = 10;
    double learning_rate = 0.1;
    int max_depth = 3;
    int train_points = 200;
    int eval_points = 500;
    double noise_variance = 0.5;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

struct BenchRow {
    std::string direction;
    int iterations = 0;
    double mean_mmd = 0.0;
    double wall_clock_s = 0.0; // training time only, cumulative
};

std::vector<BenchRow> run_bench_directions(const BenchOptions& opts);
CsvWriter bench_writer(std::span<const BenchRow> rows, std::uint64_t seed);

struct ToySinOptions {
    int n_particles = 10;
    int max_iterations = 100;
    double learning_rate = 0.1;
    int max_depth = 1;
    int train_points = 10;
    int grid_points = 200;
    double noise_variance = 0.5;
    DirectionKind direction = DiagNewton{};
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

CsvWriter toy_sin_table(const ToySinOptions& opts);

/// Entry point shared by the executable and the tests. Returns the exit code.
int run_cli(int argc, const char* const* argv);

} // namespace wgboost::cli
