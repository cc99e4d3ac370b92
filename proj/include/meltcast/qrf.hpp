#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "meltcast/dataset.hpp"

namespace meltcast::qrf {

struct QRFParams {
    int n_trees = 500;
    int min_node_size = 5;
    int features_per_split = 0;  // 0 selects ceil(p / 3)
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate(std::size_t n_features) const;
    [[nodiscard]] int resolved_features_per_split(std::size_t n_features) const;
};

struct ForestNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    // Leaves: half-open range into ForestTree::leaf_samples.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

/// A tree whose leaves keep the in-bag training indices (with bootstrap
/// multiplicity) rather than a summary value.
struct ForestTree {
    std::vector<ForestNode> nodes;
    std::vector<std::uint32_t> leaf_samples;

    [[nodiscard]] int leaf_index(std::span<const double> x) const;
};

struct QRFModel {
    std::vector<ForestTree> trees;
    std::vector<double> training_scores;
    std::vector<std::string> covariate_names;
    /// Training indices ordered by (score, index); fixed at fit time.
    std::vector<std::uint32_t> score_order;

    [[nodiscard]] std::size_t covariate_count() const noexcept { return covariate_names.size(); }
    /// Rebuilds score_order from training_scores.
    void index_scores();
};

/// Grows a forest of least-squares trees on `scores`. Per-tree randomness is
/// seeded from (seed, tree index), so the result is deterministic.
[[nodiscard]] QRFModel fit_qrf(const Matrix& covariates, std::span<const double> scores,
                               std::vector<std::string> covariate_names, const QRFParams& params);

/// Forest weights w_i(x) = mean over trees of [i in leaf(x)] / |leaf(x)|.
[[nodiscard]] std::vector<double> leaf_weights(const QRFModel& model, std::span<const double> x);

/// Lower p-quantile of the weighted empirical score distribution at x.
/// DomainError unless 0 < p < 1.
[[nodiscard]] double predict_quantile(const QRFModel& model, std::span<const double> x, double p);

/// Several levels at once, sharing one weight computation.
[[nodiscard]] std::vector<double> predict_quantiles(const QRFModel& model, std::span<const double> x,
                                                    std::span<const double> levels);

}  // namespace meltcast::qrf
