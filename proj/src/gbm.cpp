#include "meltcast/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meltcast/errors.hpp"
#include "meltcast/quantile.hpp"

namespace meltcast::gbm {

void QuantileLossParams::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
}

void BoostParams::validate() const {
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");
    if (interaction_depth < 1) throw ConfigError("interaction_depth must be >= 1");
    if (min_obs_in_node < 1) throw ConfigError("min_obs_in_node must be >= 1");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (eval_stride < 1) throw ConfigError("eval_stride must be >= 1");
}

double quantile_loss(double y, double y_hat, double tau) {
    if (!std::isfinite(y) || !std::isfinite(y_hat) || !std::isfinite(tau)) {
        throw DomainError("quantile_loss requires finite inputs");
    }
    return y >= y_hat ? tau * (y - y_hat) : (1.0 - tau) * (y_hat - y);
}

double negative_gradient(double y, double y_hat, double tau) {
    if (!std::isfinite(y) || !std::isfinite(y_hat)) {
        throw DomainError("negative_gradient requires finite inputs");
    }
    if (y > y_hat) return tau;
    if (y < y_hat) return tau - 1.0;
    return 0.0;
}

double mean_quantile_loss(std::span<const double> y, std::span<const double> y_hat, double tau) {
    if (y.size() != y_hat.size()) throw ConfigError("loss inputs differ in length");
    if (y.empty()) throw DomainError("mean loss of an empty sample");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += quantile_loss(y[i], y_hat[i], tau);
    return total / static_cast<double>(y.size());
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw InternalError("regression tree needs at least one node");
}

int RegressionTree::leaf_index(std::span<const double> x) const {
    int k = 0;
    for (;;) {
        const TreeNode& n = nodes_[static_cast<std::size_t>(k)];
        if (n.is_leaf()) return k;
        k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int RegressionTree::depth() const {
    std::vector<int> level(nodes_.size(), 0);
    int deepest = 0;
    // Children always follow their parent in storage order.
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        deepest = std::max(deepest, level[k]);
        if (!nodes_[k].is_leaf()) {
            level[static_cast<std::size_t>(nodes_[k].left)] = level[k] + 1;
            level[static_cast<std::size_t>(nodes_[k].right)] = level[k] + 1;
        }
    }
    return deepest;
}

namespace {

/// Level-wise exact split search over presorted feature columns. Sorting
/// happens once per training run; each tree costs O(depth * features * n).
class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, int max_depth, int min_obs)
        : x_(x), max_depth_(max_depth), min_obs_(min_obs), order_(x.cols()) {
        for (std::size_t f = 0; f < x.cols(); ++f) {
            auto& ord = order_[f];
            ord.resize(x.rows());
            std::iota(ord.begin(), ord.end(), std::size_t{0});
            std::stable_sort(ord.begin(), ord.end(),
                             [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
        }
    }

    RegressionTree fit(std::span<const double> g) {
        const std::size_t n = x_.rows();
        std::vector<TreeNode> nodes(1);
        std::vector<double> node_sum(1, 0.0), node_sumsq(1, 0.0);
        node_of_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            node_sum[0] += g[i];
            node_sumsq[0] += g[i] * g[i];
        }
        nodes[0].count = static_cast<int>(n);

        std::vector<int> active{0};
        for (int depth = 0; depth < max_depth_ && !active.empty(); ++depth) {
            slot_of_.assign(nodes.size(), -1);
            std::vector<Candidate> best(active.size());
            for (std::size_t s = 0; s < active.size(); ++s) {
                slot_of_[static_cast<std::size_t>(active[s])] = static_cast<int>(s);
            }
            std::vector<Scan> scan(active.size());
            for (std::size_t f = 0; f < x_.cols(); ++f) {
                for (auto& st : scan) st = Scan{};
                for (std::size_t i : order_[f]) {
                    const int slot = slot_of_[static_cast<std::size_t>(node_of_[i])];
                    if (slot < 0) continue;
                    auto& st = scan[static_cast<std::size_t>(slot)];
                    const double v = x_(i, f);
                    if (st.count > 0 && v != st.last) {
                        const int node = active[static_cast<std::size_t>(slot)];
                        const int total = nodes[static_cast<std::size_t>(node)].count;
                        const int nl = st.count;
                        const int nr = total - nl;
                        if (nl >= min_obs_ && nr >= min_obs_) {
                            const double mean_l = st.sum / nl;
                            const double mean_r = (node_sum[static_cast<std::size_t>(node)] - st.sum) / nr;
                            const double diff = mean_l - mean_r;
                            const double gain = static_cast<double>(nl) * nr / total * diff * diff;
                            auto& b = best[static_cast<std::size_t>(slot)];
                            if (gain > b.gain) {
                                b.gain = gain;
                                b.feature = static_cast<int>(f);
                                b.lo = st.last;
                                b.hi = v;
                            }
                        }
                    }
                    st.count += 1;
                    st.sum += g[i];
                    st.last = v;
                }
            }

            std::vector<int> next;
            for (std::size_t s = 0; s < active.size(); ++s) {
                const auto node = static_cast<std::size_t>(active[s]);
                const auto& b = best[s];
                if (b.feature < 0 || !(b.gain > 1e-12 * node_sumsq[node])) continue;
                double threshold = b.lo + (b.hi - b.lo) / 2.0;
                if (!(threshold < b.hi)) threshold = b.lo;
                const int left = static_cast<int>(nodes.size());
                nodes[node].feature = b.feature;
                nodes[node].threshold = threshold;
                nodes[node].gain = b.gain;
                nodes[node].left = left;
                nodes[node].right = left + 1;
                nodes.emplace_back();
                nodes.emplace_back();
                node_sum.resize(nodes.size(), 0.0);
                node_sumsq.resize(nodes.size(), 0.0);
                next.push_back(left);
                next.push_back(left + 1);
            }
            if (next.empty()) break;
            for (std::size_t i = 0; i < n; ++i) {
                const TreeNode& parent = nodes[static_cast<std::size_t>(node_of_[i])];
                if (parent.is_leaf()) continue;
                const int child =
                    x_(i, static_cast<std::size_t>(parent.feature)) <= parent.threshold ? parent.left
                                                                                        : parent.right;
                node_of_[i] = child;
                auto c = static_cast<std::size_t>(child);
                nodes[c].count += 1;
                node_sum[c] += g[i];
                node_sumsq[c] += g[i] * g[i];
            }
            active = std::move(next);
        }

        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (nodes[k].is_leaf() && nodes[k].count > 0) {
                nodes[k].value = node_sum[k] / nodes[k].count;
            }
        }
        return RegressionTree(std::move(nodes));
    }

    /// Leaf reached by each training row in the last fitted tree.
    [[nodiscard]] const std::vector<int>& row_leaves() const noexcept { return node_of_; }

private:
    struct Candidate {
        double gain = 0.0;
        int feature = -1;
        double lo = 0.0;
        double hi = 0.0;
    };
    struct Scan {
        int count = 0;
        double sum = 0.0;
        double last = 0.0;
    };

    const Matrix& x_;
    int max_depth_;
    int min_obs_;
    std::vector<std::vector<std::size_t>> order_;
    std::vector<int> node_of_;
    std::vector<int> slot_of_;
};

void check_finite(const Dataset& ds, const char* what) {
    for (double v : ds.features.data()) {
        if (!std::isfinite(v)) throw DomainError(std::string(what) + " features contain non-finite values");
    }
    for (double v : ds.response) {
        if (!std::isfinite(v)) throw DomainError(std::string(what) + " responses contain non-finite values");
    }
}

}  // namespace

RegressionTree fit_tree(const Matrix& features, std::span<const double> targets, int max_depth,
                        int min_obs_in_node) {
    if (features.rows() != targets.size()) throw ConfigError("fit_tree: targets/rows length mismatch");
    if (max_depth < 1 || min_obs_in_node < 1) throw ConfigError("fit_tree: invalid tree parameters");
    if (features.rows() == 0) return RegressionTree();
    TreeBuilder builder(features, max_depth, min_obs_in_node);
    return builder.fit(targets);
}

double terminal_update(std::span<const double> residuals_in_leaf, double tau) {
    if (residuals_in_leaf.empty()) throw InternalError("terminal update on an empty leaf");
    return lower_quantile(residuals_in_leaf, tau);
}

double TrainedBooster::predict_row(std::span<const double> x, int n_iter) const {
    double f = base_value;
    for (int m = 0; m < n_iter; ++m) f += shrinkage * trees[static_cast<std::size_t>(m)].predict(x);
    return f;
}

TrainedBooster train(const Dataset& train_set, const Dataset& calibration,
                     const QuantileLossParams& loss, const BoostParams& params) {
    loss.validate();
    params.validate();
    train_set.validate();
    calibration.validate();
    if (train_set.size() == 0 || calibration.size() == 0) {
        throw ConfigError("training and calibration data must be nonempty");
    }
    if (train_set.feature_names != calibration.feature_names) {
        throw ConfigError("training and calibration feature schemas differ");
    }
    check_finite(train_set, "training");
    check_finite(calibration, "calibration");

    const double tau = loss.tau;
    const std::size_t n = train_set.size();
    const std::size_t n_cal = calibration.size();
    const auto& y = train_set.response;
    const auto& y_cal = calibration.response;

    TrainedBooster model;
    model.tau = tau;
    model.shrinkage = params.shrinkage;
    model.feature_names = train_set.feature_names;
    model.feature_stats.resize(train_set.features.cols());
    for (std::size_t f = 0; f < train_set.features.cols(); ++f) {
        auto& s = model.feature_stats[f];
        s.min = s.max = train_set.features(0, f);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = train_set.features(i, f);
            sum += v;
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
        }
        s.mean = sum / static_cast<double>(n);
    }
    model.base_value = lower_quantile(y, tau);

    std::vector<double> fit(n, model.base_value);
    std::vector<double> fit_cal(n_cal, model.base_value);
    std::vector<double> gradient(n);
    model.training_loss_trace.reserve(static_cast<std::size_t>(params.max_iterations) + 1);
    model.training_loss_trace.push_back(mean_quantile_loss(y, fit, tau));

    TreeBuilder builder(train_set.features, params.interaction_depth, params.min_obs_in_node);
    std::vector<std::vector<double>> leaf_residuals;
    model.trees.reserve(static_cast<std::size_t>(params.max_iterations));

    for (int m = 1; m <= params.max_iterations; ++m) {
        for (std::size_t i = 0; i < n; ++i) gradient[i] = negative_gradient(y[i], fit[i], tau);
        RegressionTree tree = builder.fit(gradient);
        auto& nodes = tree.mutable_nodes();

        leaf_residuals.assign(nodes.size(), {});
        std::vector<int> leaf_of_row(n);
        for (std::size_t i = 0; i < n; ++i) {
            leaf_of_row[i] = tree.leaf_index(train_set.features.row(i));
            leaf_residuals[static_cast<std::size_t>(leaf_of_row[i])].push_back(y[i] - fit[i]);
        }
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (!nodes[k].is_leaf()) continue;
            nodes[k].value = leaf_residuals[k].empty() ? 0.0 : lower_quantile_inplace(leaf_residuals[k], tau);
        }

        for (std::size_t i = 0; i < n; ++i) {
            fit[i] += params.shrinkage * nodes[static_cast<std::size_t>(leaf_of_row[i])].value;
        }
        for (std::size_t j = 0; j < n_cal; ++j) {
            fit_cal[j] += params.shrinkage * tree.predict(calibration.features.row(j));
        }
        const double train_loss = mean_quantile_loss(y, fit, tau);
        model.training_loss_trace.push_back(train_loss);
        model.trees.push_back(std::move(tree));

        if (m % params.eval_stride == 0 || m == params.max_iterations) {
            model.loss_curve.push_back({m, mean_quantile_loss(y_cal, fit_cal, tau), train_loss});
        }
    }
    model.iterations_run = params.max_iterations;

    const auto best = std::min_element(
        model.loss_curve.begin(), model.loss_curve.end(),
        [](const LossCheckpoint& a, const LossCheckpoint& b) { return a.calibration_loss < b.calibration_loss; });
    model.best_iter = best->iteration;

    constexpr std::size_t kTrendWindow = 10;
    if (model.loss_curve.size() >= kTrendWindow) {
        bool falling = true;
        for (std::size_t k = model.loss_curve.size() - kTrendWindow + 1; k < model.loss_curve.size(); ++k) {
            if (!(model.loss_curve[k].calibration_loss < model.loss_curve[k - 1].calibration_loss)) {
                falling = false;
                break;
            }
        }
        model.early_stopping_warning = falling;
    }
    if (!params.keep_all_trees) model.trees.resize(static_cast<std::size_t>(model.best_iter));
    return model;
}

std::vector<double> predict(const TrainedBooster& booster, const Matrix& rows, std::optional<int> n_iter) {
    const int iters = n_iter.value_or(booster.best_iter);
    if (iters < 0 || static_cast<std::size_t>(iters) > booster.trees.size()) {
        throw RangeError("n_iter " + std::to_string(iters) + " exceeds the " +
                         std::to_string(booster.trees.size()) + " stored trees");
    }
    if (!rows.empty() && rows.cols() != booster.feature_names.size()) {
        throw ConfigError("prediction rows do not match the model feature schema");
    }
    // Tree-major; per-row summation order matches predict_row.
    std::vector<double> out(rows.rows(), booster.base_value);
    for (int m = 0; m < iters; ++m) {
        const auto& tree = booster.trees[static_cast<std::size_t>(m)];
        for (std::size_t i = 0; i < rows.rows(); ++i) out[i] += booster.shrinkage * tree.predict(rows.row(i));
    }
    return out;
}

}  // namespace meltcast::gbm
