#include "wgboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wgboost/error.hpp"

namespace wgboost {

void TreeParams::validate() const {
    if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
}

RegressionTree::RegressionTree(std::vector<Node> nodes, Matrix leaf_values, Index num_features)
    : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)), num_features_(num_features) {
    if (nodes_.empty()) throw DataError("tree has no nodes");
    for (const Node& node : nodes_) {
        const auto n = static_cast<std::int32_t>(nodes_.size());
        if (node.feature >= 0) {
            if (node.feature >= num_features_ || node.left <= 0 || node.right <= 0 || node.left >= n ||
                node.right >= n) {
                throw DataError("tree node references an invalid child or feature");
            }
        } else if (node.leaf < 0 || node.leaf >= leaf_values_.rows()) {
            throw DataError("tree leaf references an invalid value row");
        }
    }
}

Vector RegressionTree::predict(const VectorCRef& x) const {
    if (x.size() != num_features_) {
        throw ContractError("tree expects " + std::to_string(num_features_) + " features, got " +
                            std::to_string(x.size()));
    }
    return leaf_values_.row(leaf_for(x)).transpose();
}

int RegressionTree::depth() const {
    std::vector<int> level(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (nodes_[i].feature >= 0) {
            level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

TreeFitter::TreeFitter(const Matrix& X) : X_(X) {
    if (X_.rows() < 1) throw DataError("cannot fit a tree on an empty dataset");
    if (!X_.allFinite()) throw DataError("feature matrix contains non-finite values");
    order_.resize(static_cast<std::size_t>(X_.cols()));
    for (Index f = 0; f < X_.cols(); ++f) {
        auto& ord = order_[static_cast<std::size_t>(f)];
        ord.resize(static_cast<std::size_t>(X_.rows()));
        std::iota(ord.begin(), ord.end(), Index{0});
        std::stable_sort(ord.begin(), ord.end(), [&](Index a, Index b) { return X_(a, f) < X_(b, f); });
    }
}

namespace {

struct Split {
    Index feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class Builder {
public:
    Builder(const Matrix& X, const Matrix& Y, const TreeParams& params, std::vector<std::vector<Index>> sorted)
        : X_(X), Y_(Y), params_(params), sorted_(std::move(sorted)), goes_left_(static_cast<std::size_t>(X.rows())),
          scratch_(sorted_.empty() ? 0 : sorted_.front().size()) {}

    RegressionTree build() {
        const Index n = static_cast<Index>(sorted_.empty() ? rows_without_features_.size() : sorted_.front().size());
        grow(0, n, 0);
        Matrix leaf_values(static_cast<Index>(leaves_.size()), Y_.cols());
        for (std::size_t i = 0; i < leaves_.size(); ++i) leaf_values.row(static_cast<Index>(i)) = leaves_[i];
        return RegressionTree(std::move(nodes_), std::move(leaf_values), X_.cols());
    }

    // Only used when the feature matrix has zero columns.
    std::vector<Index> rows_without_features_;

private:
    const std::vector<Index>& node_rows() const {
        return sorted_.empty() ? rows_without_features_ : sorted_.front();
    }

    std::int32_t grow(Index begin, Index end, int depth) {
        const Index count = end - begin;
        const Index d = Y_.cols();
        const auto& rows = node_rows();

        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
        for (Index i = begin; i < end; ++i) sum += Y_.row(rows[static_cast<std::size_t>(i)]);
        const Eigen::RowVectorXd mean = sum / static_cast<double>(count);

        const auto node_id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();

        Split best;
        if (depth < params_.max_depth && count >= params_.min_samples_split && count >= 2 * params_.min_samples_leaf) {
            best = find_split(begin, end, mean);
        }
        if (best.feature < 0) {
            nodes_[static_cast<std::size_t>(node_id)].leaf = static_cast<std::int32_t>(leaves_.size());
            leaves_.push_back(mean);
            return node_id;
        }

        const Index n_left = partition(begin, end, best);
        nodes_[static_cast<std::size_t>(node_id)].feature = static_cast<std::int32_t>(best.feature);
        nodes_[static_cast<std::size_t>(node_id)].threshold = best.threshold;
        const std::int32_t left = grow(begin, begin + n_left, depth + 1);
        const std::int32_t right = grow(begin + n_left, end, depth + 1);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        nodes_[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }

    // Gain of a split = SSE(parent) - SSE(left) - SSE(right), computed from
    // centred sums: |S_left|^2 * n / (n_left * n_right).
    Split find_split(Index begin, Index end, const Eigen::RowVectorXd& mean) {
        const Index count = end - begin;
        const Index d = Y_.cols();
        const auto& rows = node_rows();

        double sse = 0.0;
        double sumsq = 0.0;
        for (Index i = begin; i < end; ++i) {
            const auto y = Y_.row(rows[static_cast<std::size_t>(i)]);
            sse += (y - mean).squaredNorm();
            sumsq += y.squaredNorm();
        }
        // Rounding floor: centred sums of an exactly constant node are not
        // exactly zero.
        const double tolerance = 1e-12 * sse + 1e-20 * sumsq;

        Split best;
        best.gain = tolerance;
        Eigen::RowVectorXd left_sum(d);
        const Index min_leaf = params_.min_samples_leaf;
        for (Index f = 0; f < X_.cols(); ++f) {
            const auto& ord = sorted_[static_cast<std::size_t>(f)];
            left_sum.setZero();
            for (Index i = begin; i < end - 1; ++i) {
                const Index row = ord[static_cast<std::size_t>(i)];
                left_sum += Y_.row(row) - mean;
                const Index n_left = i - begin + 1;
                const Index n_right = count - n_left;
                if (n_left < min_leaf) continue;
                if (n_right < min_leaf) break;
                const double x_here = X_(row, f);
                const double x_next = X_(ord[static_cast<std::size_t>(i + 1)], f);
                if (!(x_here < x_next)) continue;
                const double gain = left_sum.squaredNorm() * static_cast<double>(count) /
                                    (static_cast<double>(n_left) * static_cast<double>(n_right));
                // Relative margin so that mathematically tied gains keep the
                // earlier (lower feature, lower threshold) candidate.
                if (gain > best.gain * (1.0 + 1e-12)) {
                    double threshold = x_here + 0.5 * (x_next - x_here);
                    if (!(threshold < x_next)) threshold = x_here;
                    best = Split{f, threshold, gain};
                }
            }
        }
        if (best.feature < 0) best.gain = 0.0;
        return best;
    }

    // Stable partition of every feature's segment into left then right rows.
    Index partition(Index begin, Index end, const Split& split) {
        const auto& rows = node_rows();
        Index n_left = 0;
        for (Index i = begin; i < end; ++i) {
            const Index row = rows[static_cast<std::size_t>(i)];
            const bool left = X_(row, split.feature) <= split.threshold;
            goes_left_[static_cast<std::size_t>(row)] = left ? 1 : 0;
            n_left += left ? 1 : 0;
        }
        for (auto& ord : sorted_) {
            std::size_t l = 0;
            std::size_t r = static_cast<std::size_t>(n_left);
            for (Index i = begin; i < end; ++i) {
                const Index row = ord[static_cast<std::size_t>(i)];
                if (goes_left_[static_cast<std::size_t>(row)]) scratch_[l++] = row;
                else scratch_[r++] = row;
            }
            std::copy(scratch_.begin(), scratch_.begin() + (end - begin), ord.begin() + begin);
        }
        return n_left;
    }

    const Matrix& X_;
    const Matrix& Y_;
    const TreeParams& params_;
    std::vector<std::vector<Index>> sorted_;
    std::vector<char> goes_left_;
    std::vector<Index> scratch_;
    std::vector<RegressionTree::Node> nodes_;
    std::vector<Eigen::RowVectorXd> leaves_;
};

} // namespace

RegressionTree TreeFitter::fit(const Matrix& Y, std::span<const Index> rows, const TreeParams& params) const {
    params.validate();
    if (Y.rows() != X_.rows()) {
        throw ContractError("target rows (" + std::to_string(Y.rows()) + ") do not match feature rows (" +
                            std::to_string(X_.rows()) + ")");
    }
    if (Y.cols() < 1) throw ContractError("tree targets need at least one column");

    std::vector<char> selected(static_cast<std::size_t>(X_.rows()), rows.empty() ? 1 : 0);
    for (Index r : rows) {
        if (r < 0 || r >= X_.rows()) throw ContractError("row index out of range in tree fit");
        selected[static_cast<std::size_t>(r)] = 1;
    }
    for (Index r = 0; r < Y.rows(); ++r) {
        if (selected[static_cast<std::size_t>(r)] && !Y.row(r).allFinite()) {
            throw DataError("tree targets contain non-finite values at row " + std::to_string(r));
        }
    }

    std::vector<std::vector<Index>> sorted(order_.size());
    for (std::size_t f = 0; f < order_.size(); ++f) {
        auto& out = sorted[f];
        out.reserve(rows.empty() ? order_[f].size() : rows.size());
        for (Index r : order_[f]) {
            if (selected[static_cast<std::size_t>(r)]) out.push_back(r);
        }
    }
    Builder builder(X_, Y, params, std::move(sorted));
    if (X_.cols() == 0) {
        for (Index r = 0; r < X_.rows(); ++r) {
            if (selected[static_cast<std::size_t>(r)]) builder.rows_without_features_.push_back(r);
        }
    }
    return builder.build();
}

RegressionTree fit_tree(const Matrix& X, const Matrix& Y, const TreeParams& params) {
    return TreeFitter(X).fit(Y, {}, params);
}

} // namespace wgboost
