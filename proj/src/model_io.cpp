#include "wgboost/model_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "wgboost/error.hpp"

namespace wgboost {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw DataError(std::string(what) + " must be a non-empty array of rows");
    const auto cols = j.front().size();
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw DataError(std::string(what) + " rows differ in length");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(i), static_cast<Index>(c)) = j[i][c].get<double>();
    }
    return m;
}

json task_to_json(const TaskSpec& task) {
    return {{"family", family_name(task.family)},
            {"num_classes", task.num_classes},
            {"normal_prior",
             {{"loc_scale", task.normal_prior.loc_scale},
              {"ig_shape", task.normal_prior.ig_shape},
              {"ig_rate", task.normal_prior.ig_rate}}},
            {"categorical_prior_scale", task.categorical_prior_scale}};
}

TaskSpec task_from_json(const json& j) {
    TaskSpec task;
    task.family = parse_family(j.at("family").get<std::string>());
    task.num_classes = j.value("num_classes", 0);
    if (j.contains("normal_prior")) {
        const json& p = j["normal_prior"];
        task.normal_prior.loc_scale = p.value("loc_scale", task.normal_prior.loc_scale);
        task.normal_prior.ig_shape = p.value("ig_shape", task.normal_prior.ig_shape);
        task.normal_prior.ig_rate = p.value("ig_rate", task.normal_prior.ig_rate);
    }
    task.categorical_prior_scale = j.value("categorical_prior_scale", task.categorical_prior_scale);
    return task;
}

} // namespace

json tree_to_json(const RegressionTree& tree) {
    json nodes = json::array();
    for (const auto& node : tree.nodes()) {
        if (node.feature < 0) {
            json value = json::array();
            for (Index c = 0; c < tree.output_dim(); ++c) value.push_back(tree.leaf_values()(node.leaf, c));
            nodes.push_back({{"value", std::move(value)}});
        } else {
            nodes.push_back(
                {{"feature", node.feature}, {"threshold", node.threshold}, {"left", node.left}, {"right", node.right}});
        }
    }
    return {{"nodes", std::move(nodes)}};
}

RegressionTree tree_from_json(const json& j, Index num_features) {
    const json& nodes_json = j.at("nodes");
    std::vector<RegressionTree::Node> nodes;
    std::vector<std::vector<double>> values;
    for (const json& n : nodes_json) {
        RegressionTree::Node node;
        if (n.contains("value")) {
            node.leaf = static_cast<std::int32_t>(values.size());
            values.push_back(n.at("value").get<std::vector<double>>());
        } else {
            node.feature = n.at("feature").get<std::int32_t>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<std::int32_t>();
            node.right = n.at("right").get<std::int32_t>();
        }
        nodes.push_back(node);
    }
    if (values.empty()) throw DataError("tree has no leaves");
    Matrix leaf_values(static_cast<Index>(values.size()), static_cast<Index>(values.front().size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != values.front().size()) throw DataError("tree leaves differ in dimension");
        for (std::size_t c = 0; c < values[i].size(); ++c) {
            leaf_values(static_cast<Index>(i), static_cast<Index>(c)) = values[i][c];
        }
    }
    try {
        return RegressionTree(std::move(nodes), std::move(leaf_values), num_features);
    } catch (const ContractError& e) {
        throw DataError(std::string("malformed tree: ") + e.what());
    }
}

json config_to_json(const BoostConfig& cfg) {
    json j = {{"n_particles", cfg.n_particles},
              {"max_iterations", cfg.max_iterations},
              {"learning_rate", cfg.learning_rate},
              {"direction", direction_name(cfg.direction)},
              {"kernel_scale", cfg.kernel.scale()},
              {"max_depth", cfg.tree.max_depth},
              {"min_samples_leaf", cfg.tree.min_samples_leaf},
              {"min_samples_split", cfg.tree.min_samples_split},
              {"subsample", cfg.subsample},
              {"init_rate", cfg.init.rate},
              {"init_steps", cfg.init.steps},
              {"seed", cfg.seed},
              {"threads", cfg.threads}};
    if (const auto* l = std::get_if<Langevin>(&cfg.direction)) j["langevin_rate"] = l->rate;
    if (cfg.init.fixed) j["init_fixed"] = matrix_to_json(*cfg.init.fixed);
    return j;
}

BoostConfig config_from_json(const json& j, BoostConfig base) {
    if (!j.is_object()) throw ConfigError("boost config must be a JSON object");
    try {
        base.n_particles = j.value("n_particles", base.n_particles);
        base.max_iterations = j.value("max_iterations", base.max_iterations);
        base.learning_rate = j.value("learning_rate", base.learning_rate);
        if (j.contains("direction") || j.contains("langevin_rate")) {
            const double default_rate = std::holds_alternative<Langevin>(base.direction)
                                            ? std::get<Langevin>(base.direction).rate
                                            : Langevin{}.rate;
            base.direction = parse_direction(j.value("direction", direction_name(base.direction)),
                                             j.value("langevin_rate", default_rate));
        }
        if (j.contains("kernel_scale")) base.kernel = KernelConfig(j["kernel_scale"].get<double>());
        base.tree.max_depth = j.value("max_depth", base.tree.max_depth);
        base.tree.min_samples_leaf = j.value("min_samples_leaf", base.tree.min_samples_leaf);
        base.tree.min_samples_split = j.value("min_samples_split", base.tree.min_samples_split);
        base.subsample = j.value("subsample", base.subsample);
        base.init.rate = j.value("init_rate", base.init.rate);
        base.init.steps = j.value("init_steps", base.init.steps);
        if (j.contains("init_fixed")) base.init.fixed = matrix_from_json(j["init_fixed"], "init_fixed");
        base.seed = j.value("seed", base.seed);
        base.threads = j.value("threads", base.threads);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid boost config: ") + e.what());
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    base.validate();
    return base;
}

json model_to_json(const WGBoostModel& model) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["target_family"] = family_name(model.family);
    if (model.family == TargetFamily::Categorical) j["k"] = model.num_classes;
    if (model.standardization) {
        j["y_mean"] = model.standardization->y_mean;
        j["y_std"] = model.standardization->y_std;
    }
    j["class_labels"] = model.class_labels;
    j["task"] = task_to_json(model.task);
    j["num_features"] = model.num_features;
    if (!model.feature_names.empty()) j["feature_names"] = model.feature_names;
    j["config"] = config_to_json(model.config);
    j["init_particles"] = matrix_to_json(model.init_particles);
    json ensembles = json::array();
    for (const auto& trees : model.ensembles) {
        json seq = json::array();
        for (const auto& tree : trees) seq.push_back(tree_to_json(tree));
        ensembles.push_back(std::move(seq));
    }
    j["ensembles"] = std::move(ensembles);
    return j;
}

WGBoostModel model_from_json(const json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw DataError("unsupported model format version " + std::to_string(version));
        }
        WGBoostModel model;
        model.family = parse_family(j.at("target_family").get<std::string>());
        model.num_classes = j.value("k", 0);
        if (j.contains("y_mean")) {
            model.standardization = Standardization{j["y_mean"].get<double>(), j.at("y_std").get<double>()};
        }
        model.class_labels = j.value("class_labels", std::vector<double>{});
        if (j.contains("task")) {
            model.task = task_from_json(j["task"]);
        } else {
            model.task.family = model.family;
            model.task.num_classes = model.num_classes;
        }
        model.num_features = j.at("num_features").get<Index>();
        model.feature_names = j.value("feature_names", std::vector<std::string>{});
        if (!model.feature_names.empty() && static_cast<Index>(model.feature_names.size()) != model.num_features) {
            throw DataError("feature_names length does not match num_features");
        }
        model.config = config_from_json(j.at("config"));
        model.init_particles = matrix_from_json(j.at("init_particles"), "init_particles");
        const json& ensembles = j.at("ensembles");
        if (static_cast<Index>(ensembles.size()) != model.init_particles.rows()) {
            throw DataError("model has " + std::to_string(ensembles.size()) + " ensembles for " +
                            std::to_string(model.init_particles.rows()) + " particles");
        }
        for (const json& seq : ensembles) {
            std::vector<RegressionTree> trees;
            trees.reserve(seq.size());
            for (const json& t : seq) {
                trees.push_back(tree_from_json(t, model.num_features));
                if (trees.back().output_dim() != model.init_particles.cols()) {
                    throw DataError("tree output dimension does not match the particles");
                }
            }
            if (!model.ensembles.empty() && trees.size() != model.ensembles.front().size()) {
                throw DataError("ensembles differ in length");
            }
            model.ensembles.push_back(std::move(trees));
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("malformed model config: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw DataError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot move " + tmp.string() + " into place at " + path.string());
    }
}

void save_model(const WGBoostModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json(model).dump() + "\n");
}

WGBoostModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

} // namespace wgboost
