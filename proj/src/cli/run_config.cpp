#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

#include "wgboost/cli.hpp"
#include "wgboost/error.hpp"
#include "wgboost/model_io.hpp"

namespace wgboost::cli {

using nlohmann::json;

std::string task_name(Task task) { return task == Task::Regression ? "regression" : "classification"; }

double default_learning_rate(Task task) { return task == Task::Regression ? 0.1 : 0.4; }

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    reject_unknown_keys(j,
                        {"task", "train_csv", "test_csv", "label", "features", "output_dir", "dataset", "seed",
                         "threads", "early_stopping", "boost", "prior"},
                        "run config");
    RunConfig cfg;
    try {
        const std::string task = j.at("task").get<std::string>();
        if (task == "regression") {
            cfg.task = Task::Regression;
        } else if (task == "classification") {
            cfg.task = Task::Classification;
        } else {
            throw ConfigError("task must be 'regression' or 'classification', got '" + task + "'");
        }
        cfg.train_csv = resolve(base_dir, j.at("train_csv").get<std::string>());
        if (j.contains("test_csv")) cfg.test_csv = resolve(base_dir, j["test_csv"].get<std::string>());
        cfg.label = j.value("label", std::string{});
        cfg.features = j.value("features", std::vector<std::string>{});
        cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string(".")));
        cfg.dataset = j.value("dataset", cfg.train_csv.stem().string());

        if (j.contains("boost")) {
            const json& b = j["boost"];
            cfg.boost = config_from_json(b, cfg.boost);
            cfg.learning_rate_set = b.contains("learning_rate");
            cfg.langevin_rate_set = b.contains("langevin_rate");
            if (b.contains("seed")) cfg.seed_set = true;
        }
        if (j.contains("seed")) {
            cfg.boost.seed = j["seed"].get<std::uint64_t>();
            cfg.seed_set = true;
        }
        if (j.contains("threads")) cfg.boost.threads = j["threads"].get<std::size_t>();
        if (j.contains("early_stopping")) {
            const json& es = j["early_stopping"];
            reject_unknown_keys(es, {"enabled", "val_fraction"}, "early_stopping");
            cfg.early_stopping = es.value("enabled", true);
            cfg.val_fraction = es.value("val_fraction", cfg.val_fraction);
        }
        if (j.contains("prior")) {
            const json& p = j["prior"];
            reject_unknown_keys(p, {"loc_scale", "ig_shape", "ig_rate", "categorical_scale"}, "prior");
            cfg.normal_prior.loc_scale = p.value("loc_scale", cfg.normal_prior.loc_scale);
            cfg.normal_prior.ig_shape = p.value("ig_shape", cfg.normal_prior.ig_shape);
            cfg.normal_prior.ig_rate = p.value("ig_rate", cfg.normal_prior.ig_rate);
            cfg.categorical_prior_scale = p.value("categorical_scale", cfg.categorical_prior_scale);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid run config: ") + e.what());
    }
    if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
    if (!(cfg.normal_prior.loc_scale > 0.0 && cfg.normal_prior.ig_shape > 0.0 && cfg.normal_prior.ig_rate > 0.0 &&
          cfg.categorical_prior_scale > 0.0)) {
        throw ConfigError("prior parameters must be positive");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("WGBOOST_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    const std::string s(raw);
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("WGBOOST_SEED must be an unsigned integer, got '" + s + "'");
    }
    return seed;
}

void finalize_config(RunConfig& cfg, const Overrides& o) {
    BoostConfig& b = cfg.boost;
    if (o.n_particles) b.n_particles = *o.n_particles;
    if (o.max_iterations) b.max_iterations = *o.max_iterations;
    if (o.max_depth) b.tree.max_depth = *o.max_depth;
    if (o.subsample) b.subsample = *o.subsample;
    if (o.threads) b.threads = *o.threads;
    if (o.learning_rate) {
        b.learning_rate = *o.learning_rate;
        cfg.learning_rate_set = true;
    }
    if (o.seed) {
        b.seed = *o.seed;
        cfg.seed_set = true;
    }
    if (!cfg.learning_rate_set) b.learning_rate = default_learning_rate(cfg.task);
    if (!cfg.seed_set) {
        if (const auto env = seed_from_env()) b.seed = *env;
        cfg.seed_set = true;
    }
    if (o.direction) b.direction = parse_direction(*o.direction, b.learning_rate);
    if (auto* l = std::get_if<Langevin>(&b.direction); l && !cfg.langevin_rate_set) l->rate = b.learning_rate;
    b.validate();
}

} // namespace wgboost::cli
