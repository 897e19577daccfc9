#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "wgboost/cli.hpp"
#include "wgboost/error.hpp"

namespace wgboost::cli {

using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

json read_json_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
}

template <class T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j[key].get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const json& j) {
    if (flag) return *flag;
    if (j.contains("seed")) return j["seed"].get<std::uint64_t>();
    return seed_from_env().value_or(0);
}

void write_or_print(const CsvWriter& w, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << w.str();
    } else {
        w.write(out);
    }
}

struct BoostFlags {
    Overrides o;

    void attach(CLI::App* cmd) {
        cmd->add_option("--n-particles", o.n_particles, "Particles per input (N)");
        cmd->add_option("--max-iterations", o.max_iterations, "Boosting iterations (M)");
        cmd->add_option("--learning-rate", o.learning_rate, "Learning rate");
        cmd->add_option("--direction", o.direction, "first_order, diag_newton, full_newton or langevin");
        cmd->add_option("--max-depth", o.max_depth, "Tree depth");
        cmd->add_option("--seed", o.seed, "Master seed (fallback: WGBOOST_SEED)");
        cmd->add_option("--subsample", o.subsample, "Row fraction per iteration, in (0, 1]");
        cmd->add_option("--threads", o.threads, "Worker cap (0: available parallelism)");
    }
};

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Wasserstein gradient boosting for distributional prediction"};
    app.require_subcommand(1);

    BoostFlags train_flags;
    std::string train_config;
    std::string train_output;
    auto* train = app.add_subcommand("train", "Fit a model from a JSON run config");
    train->add_option("--config", train_config, "Run config JSON")->required();
    train->add_option("--output-dir", train_output, "Overrides output_dir");
    train_flags.attach(train);

    std::string eval_model, eval_data, eval_label, eval_out, eval_rows;
    auto* evaluate = app.add_subcommand("evaluate", "Score a model on labelled data");
    evaluate->add_option("--model", eval_model, "Model JSON")->required();
    evaluate->add_option("--data", eval_data, "CSV with the model's features and a label column")->required();
    evaluate->add_option("--label", eval_label, "Label column (default: last)");
    evaluate->add_option("--output", eval_out, "Metrics CSV")->required();
    evaluate->add_option("--rows", eval_rows, "Optional per-row prediction CSV");

    std::string pred_model, pred_data, pred_out;
    auto* predict = app.add_subcommand("predict", "Write per-row particles and summaries");
    predict->add_option("--model", pred_model, "Model JSON")->required();
    predict->add_option("--data", pred_data, "CSV with the model's feature columns")->required();
    predict->add_option("--output", pred_out, "Prediction CSV")->required();

    std::string bench_config, bench_out;
    std::optional<int> bench_particles, bench_depth;
    std::optional<double> bench_rate;
    std::optional<std::uint64_t> bench_seed;
    std::optional<std::size_t> bench_threads;
    std::vector<int> bench_checkpoints;
    std::vector<std::string> bench_directions;
    auto* bench = app.add_subcommand("bench-directions", "Compare direction estimators on the sin benchmark");
    bench->add_option("--config", bench_config, "Optional JSON with the same keys as the flags");
    bench->add_option("--output", bench_out, "Comparison CSV (default: stdout)");
    bench->add_option("--n-particles", bench_particles, "Particles per input");
    bench->add_option("--learning-rate", bench_rate, "Learning rate");
    bench->add_option("--max-depth", bench_depth, "Tree depth");
    bench->add_option("--seed", bench_seed, "Master seed");
    bench->add_option("--threads", bench_threads, "Worker cap");
    bench->add_option("--checkpoints", bench_checkpoints, "Weak-learner counts to report")->delimiter(',');
    bench->add_option("--directions", bench_directions, "Direction kinds to run")->delimiter(',');

    std::string toy_config, toy_out;
    std::optional<int> toy_particles, toy_iterations, toy_depth, toy_grid;
    std::optional<double> toy_rate;
    std::optional<std::string> toy_direction;
    std::optional<std::uint64_t> toy_seed;
    std::optional<std::size_t> toy_threads;
    auto* toy = app.add_subcommand("toy-sin", "Particles on a grid for the 10-point sin example");
    toy->add_option("--config", toy_config, "Optional JSON with the same keys as the flags");
    toy->add_option("--output", toy_out, "Particle CSV (default: stdout)");
    toy->add_option("--n-particles", toy_particles, "Particles per input");
    toy->add_option("--max-iterations", toy_iterations, "Boosting iterations");
    toy->add_option("--learning-rate", toy_rate, "Learning rate");
    toy->add_option("--max-depth", toy_depth, "Tree depth");
    toy->add_option("--direction", toy_direction, "Direction kind");
    toy->add_option("--grid-points", toy_grid, "Output grid size");
    toy->add_option("--seed", toy_seed, "Master seed");
    toy->add_option("--threads", toy_threads, "Worker cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*train) {
            RunConfig cfg = load_run_config(train_config);
            if (!train_output.empty()) cfg.output_dir = train_output;
            finalize_config(cfg, train_flags.o);
            const TrainResult r = cmd_train(cfg);
            std::cerr << "wrote " << r.model_path.string() << " (" << r.best_iterations << " iterations)\n";
        } else if (*evaluate) {
            cmd_evaluate(eval_model, eval_data, eval_label, eval_out,
                         eval_rows.empty() ? std::nullopt : std::optional<fs::path>(eval_rows));
        } else if (*predict) {
            cmd_predict(pred_model, pred_data, pred_out);
        } else if (*bench) {
            const json j = read_json_config(bench_config);
            BenchOptions opts;
            take(j, "n_particles", opts.n_particles);
            take(j, "learning_rate", opts.learning_rate);
            take(j, "max_depth", opts.max_depth);
            take(j, "train_points", opts.train_points);
            take(j, "eval_points", opts.eval_points);
            take(j, "checkpoints", opts.checkpoints);
            take(j, "threads", opts.threads);
            if (bench_particles) opts.n_particles = *bench_particles;
            if (bench_rate) opts.learning_rate = *bench_rate;
            if (bench_depth) opts.max_depth = *bench_depth;
            if (bench_threads) opts.threads = *bench_threads;
            if (!bench_checkpoints.empty()) opts.checkpoints = bench_checkpoints;
            opts.seed = resolve_seed(bench_seed, j);
            std::vector<std::string> names = bench_directions;
            if (names.empty()) take(j, "directions", names);
            if (!names.empty()) {
                opts.directions.clear();
                for (const auto& n : names) opts.directions.push_back(parse_direction(n, opts.learning_rate));
            } else {
                opts.directions.back() = Langevin{opts.learning_rate};
            }
            const auto rows = run_bench_directions(opts);
            write_or_print(bench_writer(rows, opts.seed), bench_out);
        } else if (*toy) {
            const json j = read_json_config(toy_config);
            ToySinOptions opts;
            take(j, "n_particles", opts.n_particles);
            take(j, "max_iterations", opts.max_iterations);
            take(j, "learning_rate", opts.learning_rate);
            take(j, "max_depth", opts.max_depth);
            take(j, "grid_points", opts.grid_points);
            take(j, "threads", opts.threads);
            std::string direction = j.value("direction", std::string("diag_newton"));
            if (toy_particles) opts.n_particles = *toy_particles;
            if (toy_iterations) opts.max_iterations = *toy_iterations;
            if (toy_rate) opts.learning_rate = *toy_rate;
            if (toy_depth) opts.max_depth = *toy_depth;
            if (toy_grid) opts.grid_points = *toy_grid;
            if (toy_threads) opts.threads = *toy_threads;
            if (toy_direction) direction = *toy_direction;
            opts.direction = parse_direction(direction, opts.learning_rate);
            opts.seed = resolve_seed(toy_seed, j);
            write_or_print(toy_sin_table(opts), toy_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace wgboost::cli
