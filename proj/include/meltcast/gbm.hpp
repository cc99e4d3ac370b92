#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meltcast/dataset.hpp"

namespace meltcast::gbm {

struct QuantileLossParams {
    double tau = 0.60;
    void validate() const;
};

struct BoostParams {
    double shrinkage = 0.0001;
    int interaction_depth = 6;  // maximum tree depth
    int min_obs_in_node = 6;
    int max_iterations = 40000;
    int eval_stride = 100;
    std::uint64_t seed = 0;
    /// Retain trees past best_iter. Off by default: prediction never uses
    /// them and at the default shrinkage they dominate model size.
    bool keep_all_trees = false;

    void validate() const;
};

/// Pinball loss. Throws DomainError on non-finite input.
[[nodiscard]] double quantile_loss(double y, double y_hat, double tau);

/// Negative subgradient of the pinball loss with respect to y_hat:
/// tau above the fit, tau - 1 below it, 0 on the kink.
[[nodiscard]] double negative_gradient(double y, double y_hat, double tau);

[[nodiscard]] double mean_quantile_loss(std::span<const double> y, std::span<const double> y_hat,
                                        double tau);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output
    double gain = 0.0;   // squared-error reduction of a split
    int count = 0;       // training rows routed here

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

/// Binary regression tree; rows with x[feature] <= threshold go left.
class RegressionTree {
public:
    RegressionTree() : nodes_(1) {}
    explicit RegressionTree(std::vector<TreeNode> nodes);

    [[nodiscard]] int leaf_index(std::span<const double> x) const;
    [[nodiscard]] double predict(std::span<const double> x) const {
        return nodes_[static_cast<std::size_t>(leaf_index(x))].value;
    }
    [[nodiscard]] std::size_t leaf_count() const;
    [[nodiscard]] int depth() const;
    [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::vector<TreeNode>& mutable_nodes() noexcept { return nodes_; }

private:
    std::vector<TreeNode> nodes_;
};

/// Greedy least-squares tree on `targets`, exact over all midpoints between
/// consecutive distinct feature values. Leaves hold the target mean.
[[nodiscard]] RegressionTree fit_tree(const Matrix& features, std::span<const double> targets,
                                      int max_depth, int min_obs_in_node);

/// Per-leaf pinball minimizer: the lower-interpolated tau-quantile.
[[nodiscard]] double terminal_update(std::span<const double> residuals_in_leaf, double tau);

struct LossCheckpoint {
    int iteration = 0;
    double calibration_loss = 0.0;
    double training_loss = 0.0;
};

struct FeatureSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct TrainedBooster {
    double base_value = 0.0;
    double shrinkage = 0.0;
    double tau = 0.60;
    int best_iter = 0;
    int iterations_run = 0;
    std::vector<std::string> feature_names;
    std::vector<FeatureSummary> feature_stats;  // training-set summaries
    std::vector<RegressionTree> trees;
    std::vector<LossCheckpoint> loss_curve;
    /// Calibration loss was still strictly falling over the last 10 checkpoints.
    bool early_stopping_warning = false;
    /// Mean training loss after every iteration (index 0 = base value only).
    /// Not persisted.
    std::vector<double> training_loss_trace;

    [[nodiscard]] double predict_row(std::span<const double> x, int n_iter) const;
};

/// Fits the ensemble on `train`, scoring `calibration` every eval_stride
/// iterations (and at the final iteration) to pick best_iter.
[[nodiscard]] TrainedBooster train(const Dataset& train, const Dataset& calibration,
                                   const QuantileLossParams& loss, const BoostParams& params);

/// base_value + shrinkage * sum of the first n_iter trees, per row.
/// n_iter defaults to best_iter; RangeError if more than stored trees.
[[nodiscard]] std::vector<double> predict(const TrainedBooster& booster, const Matrix& rows,
                                          std::optional<int> n_iter = std::nullopt);

}  // namespace meltcast::gbm
