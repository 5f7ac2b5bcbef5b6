#pragma once

// Decision tree and random forest on sparse TF-IDF vectors. Splits
// minimize class-weighted Gini impurity; candidate features are the
// columns that are nonzero somewhere in the training data. Training is
// single-threaded and fully determined by the seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ctc/corpus.hpp"
#include "ctc/errors.hpp"
#include "ctc/nn.hpp"
#include "ctc/random.hpp"
#include "ctc/vectorizer.hpp"

namespace ctc {

/// Flat array representation; feature < 0 marks a leaf. prob holds the
/// weighted class shares (noncyber, cyber) of every node.
struct TreeModel {
    std::vector<std::int32_t> feature;
    std::vector<float> threshold;
    std::vector<std::int32_t> left;
    std::vector<std::int32_t> right;
    std::vector<float> prob;  // 2 * n_nodes

    std::size_t n_nodes() const { return feature.size(); }

    /// (p_noncyber, p_cyber) of the leaf the vector lands in.
    std::pair<float, float> leaf_prob(const FeatureVector& v) const {
        std::int32_t i = 0;
        while (feature[i] >= 0) {
            const float x = value_at(v, static_cast<std::uint32_t>(feature[i]));
            i = x <= threshold[i] ? left[i] : right[i];
        }
        return {prob[2 * i], prob[2 * i + 1]};
    }

    int depth() const {
        std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
        int deepest = 0;
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            deepest = std::max(deepest, d);
            if (feature[i] >= 0) {
                stack.push_back({left[i], d + 1});
                stack.push_back({right[i], d + 1});
            }
        }
        return deepest;
    }

    static float value_at(const FeatureVector& v, std::uint32_t feat) {
        auto it = std::lower_bound(v.idx.begin(), v.idx.end(), feat);
        if (it == v.idx.end() || *it != feat) return 0.0f;
        return v.val[it - v.idx.begin()];
    }
};

struct ForestModel {
    std::vector<TreeModel> trees;

    /// Fraction of trees voting cyber (per-tree argmax, ties noncyber).
    double cyber_vote_fraction(const FeatureVector& v) const {
        std::size_t votes = 0;
        for (const TreeModel& t : trees) {
            auto [p0, p1] = t.leaf_prob(v);
            if (p1 > p0) ++votes;
        }
        return static_cast<double>(votes) / static_cast<double>(trees.size());
    }
};

namespace detail {

struct TreeGrowConfig {
    int max_depth = 100;        // <= 0 means unlimited
    std::size_t min_leaf = 1;
    std::size_t features_per_split = 0;  // 0 = all candidates
};

class TreeGrower {
public:
    TreeGrower(const std::vector<const FeatureVector*>& X, const std::vector<int>& label01,
               const std::vector<double>& row_weight)
        : label_(label01), weight_(row_weight) {
        // Dense submatrix over columns that appear in the data.
        const std::size_t dim = X.empty() ? 0 : X.front()->dim;
        std::vector<char> seen(dim, 0);
        for (const FeatureVector* v : X)
            for (std::uint32_t f : v->idx) seen[f] = 1;
        for (std::uint32_t f = 0; f < dim; ++f)
            if (seen[f]) alive_.push_back(f);
        dense_ = nn::Mat<float>(X.size(), alive_.size());
        std::vector<std::uint32_t> col_of(dim, 0);
        for (std::size_t c = 0; c < alive_.size(); ++c) col_of[alive_[c]] = static_cast<std::uint32_t>(c);
        for (std::size_t i = 0; i < X.size(); ++i) {
            float* row = dense_.row(i);
            for (std::size_t k = 0; k < X[i]->nnz(); ++k) row[col_of[X[i]->idx[k]]] = X[i]->val[k];
        }
    }

    std::size_t n_candidate_features() const { return alive_.size(); }

    TreeModel grow(const std::vector<std::uint32_t>& root_rows, const TreeGrowConfig& cfg,
                   Rng* rng) {
        TreeModel tree;
        struct Job {
            std::vector<std::uint32_t> rows;
            int depth;
            std::int32_t parent;  // -1 for root
            bool is_left;
        };
        std::vector<Job> stack;
        stack.push_back({root_rows, 0, -1, false});
        std::vector<std::uint32_t> scratch;

        while (!stack.empty()) {
            Job job = std::move(stack.back());
            stack.pop_back();
            const std::int32_t me = static_cast<std::int32_t>(tree.n_nodes());
            if (job.parent >= 0) (job.is_left ? tree.left : tree.right)[job.parent] = me;

            double w0 = 0, w1 = 0;
            for (std::uint32_t r : job.rows) (label_[r] ? w1 : w0) += weight_[r];
            const double w = w0 + w1;
            tree.feature.push_back(-1);
            tree.threshold.push_back(0.0f);
            tree.left.push_back(-1);
            tree.right.push_back(-1);
            tree.prob.push_back(static_cast<float>(w0 / w));
            tree.prob.push_back(static_cast<float>(w1 / w));

            const bool depth_capped = cfg.max_depth > 0 && job.depth >= cfg.max_depth;
            if (w0 == 0.0 || w1 == 0.0 || depth_capped || job.rows.size() < 2 * cfg.min_leaf)
                continue;

            BestSplit best = find_split(job.rows, w0, w1, cfg, rng, scratch);
            if (best.feature < 0) continue;

            tree.feature[me] = static_cast<std::int32_t>(alive_[best.feature]);
            tree.threshold[me] = best.threshold;
            std::vector<std::uint32_t> lrows, rrows;
            for (std::uint32_t r : job.rows)
                (dense_(r, best.feature) <= best.threshold ? lrows : rrows).push_back(r);
            // Right pushed first so the left child is created (and numbered) first.
            stack.push_back({std::move(rrows), job.depth + 1, me, false});
            stack.push_back({std::move(lrows), job.depth + 1, me, true});
        }
        return tree;
    }

private:
    struct BestSplit {
        int feature = -1;  // index into alive_
        float threshold = 0.0f;
        double decrease = 1e-12;  // strictly-better floor
    };

    struct Entry {
        float v;
        float w0, w1;
    };

    BestSplit find_split(const std::vector<std::uint32_t>& rows, double w0, double w1,
                         const TreeGrowConfig& cfg, Rng* rng, std::vector<std::uint32_t>& scratch) {
        const double w = w0 + w1;
        const double gini_parent = 1.0 - (w0 / w) * (w0 / w) - (w1 / w) * (w1 / w);

        scratch.clear();
        if (cfg.features_per_split == 0 || cfg.features_per_split >= alive_.size()) {
            for (std::size_t c = 0; c < alive_.size(); ++c)
                scratch.push_back(static_cast<std::uint32_t>(c));
        } else {
            // Partial Fisher-Yates draw of distinct candidate columns.
            std::vector<std::uint32_t> pool(alive_.size());
            for (std::size_t c = 0; c < pool.size(); ++c) pool[c] = static_cast<std::uint32_t>(c);
            for (std::size_t k = 0; k < cfg.features_per_split; ++k) {
                const std::size_t j = k + static_cast<std::size_t>(rng->below(pool.size() - k));
                std::swap(pool[k], pool[j]);
                scratch.push_back(pool[k]);
            }
            std::sort(scratch.begin(), scratch.end());
        }

        BestSplit best;
        std::vector<Entry> entries;
        entries.reserve(rows.size());
        for (std::uint32_t c : scratch) {
            entries.clear();
            for (std::uint32_t r : rows) {
                const float cw = static_cast<float>(weight_[r]);
                entries.push_back({dense_(r, c), label_[r] ? 0.0f : cw, label_[r] ? cw : 0.0f});
            }
            std::sort(entries.begin(), entries.end(),
                      [](const Entry& a, const Entry& b) { return a.v < b.v; });
            if (entries.front().v == entries.back().v) continue;

            double l0 = 0, l1 = 0;
            for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
                l0 += entries[i].w0;
                l1 += entries[i].w1;
                if (entries[i].v == entries[i + 1].v) continue;
                const double wl = l0 + l1, wr = w - wl;
                const double gl = 1.0 - (l0 / wl) * (l0 / wl) - (l1 / wl) * (l1 / wl);
                const double r0 = w0 - l0, r1 = w1 - l1;
                const double gr = 1.0 - (r0 / wr) * (r0 / wr) - (r1 / wr) * (r1 / wr);
                const double decrease = gini_parent - (wl * gl + wr * gr) / w;
                if (decrease > best.decrease) {
                    float mid = (entries[i].v + entries[i + 1].v) / 2.0f;
                    if (mid >= entries[i + 1].v) mid = entries[i].v;  // float rounding guard
                    best = {static_cast<int>(c), mid, decrease};
                }
            }
        }
        return best;
    }

    std::vector<std::uint32_t> alive_;
    nn::Mat<float> dense_;
    const std::vector<int>& label_;
    const std::vector<double>& weight_;
};

}  // namespace detail

/// Single CART tree, weighted Gini, all candidate features per split.
inline TreeModel train_decision_tree(const std::vector<const FeatureVector*>& X,
                                     const std::vector<int>& label01,
                                     const std::vector<double>& row_weight, int max_depth) {
    detail::TreeGrower grower(X, label01, row_weight);
    std::vector<std::uint32_t> rows(X.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    detail::TreeGrowConfig cfg;
    cfg.max_depth = max_depth;
    return grower.grow(rows, cfg, nullptr);
}

/// Bagged forest: bootstrap rows per tree, sqrt(F) random candidate
/// columns per split, unlimited depth.
inline ForestModel train_random_forest(const std::vector<const FeatureVector*>& X,
                                       const std::vector<int>& label01,
                                       const std::vector<double>& row_weight, std::size_t n_trees,
                                       std::uint64_t seed) {
    detail::TreeGrower grower(X, label01, row_weight);
    detail::TreeGrowConfig cfg;
    cfg.max_depth = 0;
    cfg.features_per_split = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(static_cast<double>(grower.n_candidate_features()))));

    ForestModel forest;
    const std::size_t n = X.size();
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng(mix_seed(seed, t));
        std::vector<std::uint32_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(rng.below(n));
        std::sort(rows.begin(), rows.end());
        forest.trees.push_back(grower.grow(rows, cfg, &rng));
    }
    return forest;
}

}  // namespace ctc
