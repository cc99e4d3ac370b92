#include "meltcast/qrf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "meltcast/errors.hpp"
#include "meltcast/quantile.hpp"

namespace meltcast::qrf {

void QRFParams::validate(std::size_t n_features) const {
    if (n_trees < 1) throw ConfigError("QRF n_trees must be >= 1");
    if (min_node_size < 1) throw ConfigError("QRF min_node_size must be >= 1");
    if (features_per_split < 0) throw ConfigError("QRF features_per_split must be >= 0");
    if (static_cast<std::size_t>(resolved_features_per_split(n_features)) > n_features) {
        throw ConfigError("QRF features_per_split exceeds the covariate count");
    }
}

int QRFParams::resolved_features_per_split(std::size_t n_features) const {
    if (features_per_split > 0) return features_per_split;
    return std::max(1, static_cast<int>((n_features + 2) / 3));
}

int ForestTree::leaf_index(std::span<const double> x) const {
    int k = 0;
    for (;;) {
        const ForestNode& n = nodes[static_cast<std::size_t>(k)];
        if (n.is_leaf()) return k;
        k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
}

void QRFModel::index_scores() {
    score_order.resize(training_scores.size());
    std::iota(score_order.begin(), score_order.end(), std::uint32_t{0});
    std::sort(score_order.begin(), score_order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return training_scores[a] != training_scores[b] ? training_scores[a] < training_scores[b] : a < b;
    });
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class ForestTreeGrower {
public:
    ForestTreeGrower(const Matrix& x, std::span<const double> y, int mtry, int min_node, std::mt19937_64& rng)
        : x_(x), y_(y), mtry_(mtry), min_node_(min_node), rng_(rng), features_(x.cols()) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    ForestTree grow(std::vector<std::uint32_t> samples) {
        tree_.nodes.clear();
        tree_.leaf_samples.clear();
        tree_.nodes.emplace_back();
        split(0, std::move(samples));
        return std::move(tree_);
    }

private:
    struct Best {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
    };

    void make_leaf(std::size_t node, const std::vector<std::uint32_t>& samples) {
        auto& n = tree_.nodes[node];
        n.begin = static_cast<std::uint32_t>(tree_.leaf_samples.size());
        tree_.leaf_samples.insert(tree_.leaf_samples.end(), samples.begin(), samples.end());
        n.end = static_cast<std::uint32_t>(tree_.leaf_samples.size());
    }

    void split(std::size_t node, std::vector<std::uint32_t> samples) {
        const auto count = samples.size();
        if (count < 2 * static_cast<std::size_t>(min_node_)) {
            make_leaf(node, samples);
            return;
        }
        double sum = 0.0, sumsq = 0.0;
        for (auto i : samples) {
            sum += y_[i];
            sumsq += y_[i] * y_[i];
        }

        // Partial Fisher-Yates: the first mtry entries become the candidates.
        for (int k = 0; k < mtry_; ++k) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), features_.size() - 1);
            std::swap(features_[static_cast<std::size_t>(k)], features_[pick(rng_)]);
        }
        std::vector<std::size_t> candidates(features_.begin(), features_.begin() + mtry_);
        std::sort(candidates.begin(), candidates.end());

        Best best;
        std::vector<std::uint32_t> ordered = samples;
        for (std::size_t f : candidates) {
            std::stable_sort(ordered.begin(), ordered.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return x_(a, f) < x_(b, f); });
            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < count; ++k) {
                left_sum += y_[ordered[k]];
                const double lo = x_(ordered[k], f);
                const double hi = x_(ordered[k + 1], f);
                if (!(lo < hi)) continue;
                const std::size_t nl = k + 1;
                const std::size_t nr = count - nl;
                if (nl < static_cast<std::size_t>(min_node_) || nr < static_cast<std::size_t>(min_node_)) continue;
                const double diff = left_sum / static_cast<double>(nl) - (sum - left_sum) / static_cast<double>(nr);
                const double gain = static_cast<double>(nl) * static_cast<double>(nr) / static_cast<double>(count) * diff * diff;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    double t = lo + (hi - lo) / 2.0;
                    if (!(t < hi)) t = lo;
                    best.threshold = t;
                }
            }
        }
        if (best.feature < 0 || !(best.gain > 1e-12 * sumsq)) {
            make_leaf(node, samples);
            return;
        }

        std::vector<std::uint32_t> left, right;
        for (auto i : samples) {
            (x_(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
        }
        samples.clear();
        samples.shrink_to_fit();
        const auto left_id = tree_.nodes.size();
        tree_.nodes.emplace_back();
        tree_.nodes.emplace_back();
        auto& n = tree_.nodes[node];
        n.feature = best.feature;
        n.threshold = best.threshold;
        n.left = static_cast<int>(left_id);
        n.right = static_cast<int>(left_id + 1);
        split(left_id, std::move(left));
        split(left_id + 1, std::move(right));
    }

    const Matrix& x_;
    std::span<const double> y_;
    int mtry_;
    int min_node_;
    std::mt19937_64& rng_;
    std::vector<std::size_t> features_;
    ForestTree tree_;
};

void check_level(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie strictly between 0 and 1");
}

}  // namespace

QRFModel fit_qrf(const Matrix& covariates, std::span<const double> scores,
                 std::vector<std::string> covariate_names, const QRFParams& params) {
    if (covariates.rows() != scores.size()) throw ConfigError("QRF covariates and scores differ in length");
    if (covariate_names.size() != covariates.cols()) throw ConfigError("QRF covariate names do not match width");
    params.validate(covariates.cols());
    if (scores.size() < static_cast<std::size_t>(params.min_node_size)) {
        throw InsufficientDataError("QRF needs at least min_node_size scores");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw DomainError("QRF scores must be finite");
    }
    for (double v : covariates.data()) {
        if (!std::isfinite(v)) throw DomainError("QRF covariates must be finite");
    }

    QRFModel model;
    model.training_scores.assign(scores.begin(), scores.end());
    model.covariate_names = std::move(covariate_names);
    model.index_scores();

    const auto n = static_cast<std::uint32_t>(scores.size());
    const int mtry = params.resolved_features_per_split(covariates.cols());
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        std::mt19937_64 rng(splitmix64(params.seed ^ splitmix64(static_cast<std::uint64_t>(t))));
        std::vector<std::uint32_t> samples(n);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::uint32_t> draw(0, n - 1);
            for (auto& s : samples) s = draw(rng);
            std::sort(samples.begin(), samples.end());
        } else {
            std::iota(samples.begin(), samples.end(), std::uint32_t{0});
        }
        ForestTreeGrower grower(covariates, model.training_scores, mtry, params.min_node_size, rng);
        model.trees.push_back(grower.grow(std::move(samples)));
    }
    return model;
}

std::vector<double> leaf_weights(const QRFModel& model, std::span<const double> x) {
    if (x.size() != model.covariate_count()) throw ConfigError("QRF query does not match the covariate schema");
    std::vector<double> w(model.training_scores.size(), 0.0);
    for (const auto& tree : model.trees) {
        const auto& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_index(x))];
        const double share = 1.0 / static_cast<double>(leaf.end - leaf.begin);
        for (auto k = leaf.begin; k < leaf.end; ++k) w[tree.leaf_samples[k]] += share;
    }
    const double n_trees = static_cast<double>(model.trees.size());
    for (auto& v : w) v /= n_trees;
    return w;
}

std::vector<double> predict_quantiles(const QRFModel& model, std::span<const double> x,
                                      std::span<const double> levels) {
    for (double p : levels) check_level(p);
    if (model.trees.empty()) throw ConfigError("QRF model has no trees");
    const auto w = leaf_weights(model, x);
    std::vector<double> out;
    out.reserve(levels.size());
    for (double p : levels) {
        double cum = 0.0;
        double answer = 0.0;
        // If rounding leaves the total a hair under p, the loop ends on the
        // largest reachable score.
        for (auto idx : model.score_order) {
            if (w[idx] == 0.0) continue;
            cum += w[idx];
            answer = model.training_scores[idx];
            if (cum >= p - kCdfSlack) break;
        }
        out.push_back(answer);
    }
    return out;
}

double predict_quantile(const QRFModel& model, std::span<const double> x, double p) {
    const double level[1] = {p};
    return predict_quantiles(model, x, level).front();
}

}  // namespace meltcast::qrf
