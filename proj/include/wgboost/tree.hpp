#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wgboost/types.hpp"

namespace wgboost {

struct TreeParams {
    int max_depth = 3; // 0 means a single leaf
    int min_samples_leaf = 1;
    int min_samples_split = 2;

    void validate() const;
};

/// Axis-aligned binary regression tree with vector-valued leaves.
/// Routing: left iff x[feature] <= threshold.
class RegressionTree {
public:
    struct Node {
        std::int32_t feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int32_t leaf = -1; // index into leaf values
    };

    RegressionTree() = default;
    RegressionTree(std::vector<Node> nodes, Matrix leaf_values, Index num_features);

    Index num_features() const noexcept { return num_features_; }
    Index output_dim() const noexcept { return leaf_values_.cols(); }
    Index num_leaves() const noexcept { return leaf_values_.rows(); }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Matrix& leaf_values() const noexcept { return leaf_values_; }

    /// Leaf reached by `x`; any type with `x(f)` access works.
    template <class Row>
    Index leaf_for(const Row& x) const {
        std::int32_t i = 0;
        while (nodes_[i].feature >= 0) {
            const Node& node = nodes_[i];
            i = x(node.feature) <= node.threshold ? node.left : node.right;
        }
        return nodes_[i].leaf;
    }

    /// Checked prediction for one feature vector.
    Vector predict(const VectorCRef& x) const;

    /// Prediction for row `row` of a feature matrix (unchecked).
    auto predict_row(const Matrix& X, Index row) const { return leaf_values_.row(leaf_for(X.row(row))); }

    int depth() const;

private:
    std::vector<Node> nodes_;
    Matrix leaf_values_; // num_leaves x d
    Index num_features_ = 0;
};

/// Greedy CART on multi-output squared error. Feature columns are presorted
/// once so the same fitter serves every boosting iteration.
class TreeFitter {
public:
    explicit TreeFitter(const Matrix& X);

    Index num_rows() const noexcept { return X_.rows(); }

    /// Fits on the rows listed in `rows` (all rows when empty). `Y` is indexed
    /// by the same row ids as the feature matrix.
    RegressionTree fit(const Matrix& Y, std::span<const Index> rows, const TreeParams& params) const;

private:
    Matrix X_;
    std::vector<std::vector<Index>> order_; // per feature, rows by ascending value
};

RegressionTree fit_tree(const Matrix& X, const Matrix& Y, const TreeParams& params);

} // namespace wgboost
