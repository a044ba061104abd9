#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "image.hpp"
#include "matrix.hpp"
#include "params.hpp"
#include "svm.hpp"

namespace pvdefect {

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;         // leaf output, learning rate already applied
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const {
        std::int32_t i = 0;
        while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
        return nodes[i].value;
    }
    std::size_t leaves() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](auto& n) { return n.feature < 0; }));
    }
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// Softmax boosting: trees[round * classes.size() + k] adds to the logit of classes[k].
struct GbdtModel {
    std::vector<int> classes;
    double eta = 0.1;
    Growth growth = Growth::Levelwise;
    int rounds = 0;
    std::vector<RegressionTree> trees;
    std::vector<double> train_logloss;  // after each round
    std::uint32_t degenerate_trees = 0; // trees that found no positive-gain split
    friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

struct GbdtPrediction {
    ClassLabel label = ClassLabel::Clean;
    std::array<double, kNumClasses> probabilities{};  // zero for classes absent at training time
    double score = 0.0;                               // probability of the predicted label
};

namespace detail {

/// Per-feature quantile bins; edges[f][b] is the largest training value in bin b.
struct Binning {
    std::vector<std::vector<double>> edges;
    std::vector<std::uint8_t> codes;  // features x samples, column-major
    std::size_t features = 0;
    std::size_t samples = 0;

    Binning(const Matrix& X, int max_bins)
        : edges(X.cols()), codes(X.rows() * X.cols()), features(X.cols()), samples(X.rows()) {
        const std::size_t n = X.rows();
        std::vector<double> col(n);
        for (std::size_t f = 0; f < features; ++f) {
            for (std::size_t i = 0; i < n; ++i) col[i] = X(i, f);
            std::vector<double> sorted = col;
            std::sort(sorted.begin(), sorted.end());
            std::vector<double> uniq = sorted;
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            auto& e = edges[f];
            if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
                e = uniq;
            } else {
                for (int b = 1; b <= max_bins; ++b) {
                    const std::size_t rank = (static_cast<std::size_t>(b) * n + max_bins - 1) / max_bins;
                    e.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
                }
                e.erase(std::unique(e.begin(), e.end()), e.end());
            }
            for (std::size_t i = 0; i < n; ++i)
                codes[f * n + i] =
                    static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), col[i]) - e.begin());
        }
    }
};

struct SplitCandidate {
    double gain = 0.0;
    std::int32_t feature = -1;
    int bin = -1;
};

class TreeBuilder {
public:
    TreeBuilder(const Binning& bins, const GbdtParams& p, std::span<const double> g, std::span<const double> h)
        : bins_(bins), p_(p), g_(g), h_(h), hist_(256) {}

    RegressionTree build(bool* degenerate) {
        RegressionTree tree;
        std::vector<std::uint32_t> all(g_.size());
        for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
        tree.nodes.push_back(make_leaf(all));
        struct Pending {
            std::int32_t node;
            std::vector<std::uint32_t> samples;
            int depth;
            SplitCandidate split;
        };
        Pending root{0, std::move(all), 0, {}};
        root.split = best_split(root.samples);
        *degenerate = root.split.feature < 0;

        if (p_.growth == Growth::Levelwise) {
            std::vector<Pending> level;
            level.push_back(std::move(root));
            while (!level.empty()) {
                std::vector<Pending> next;
                for (auto& pn : level) {
                    if (pn.depth >= p_.max_depth || pn.split.feature < 0) continue;
                    auto children = apply_split(tree, pn.node, pn.samples, pn.split);
                    for (auto& [id, s] : children) {
                        Pending c{id, std::move(s), pn.depth + 1, {}};
                        if (c.depth < p_.max_depth) c.split = best_split(c.samples);
                        next.push_back(std::move(c));
                    }
                }
                level = std::move(next);
            }
        } else {
            // Best-first: always split the leaf with the largest gain; ties go to the older leaf.
            auto cmp = [](const Pending& a, const Pending& b) {
                return a.split.gain < b.split.gain || (a.split.gain == b.split.gain && a.node > b.node);
            };
            std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> frontier(cmp);
            if (root.split.feature >= 0) frontier.push(std::move(root));
            std::size_t leaves = 1;
            while (!frontier.empty() && leaves < static_cast<std::size_t>(p_.max_leaves)) {
                Pending pn = frontier.top();
                frontier.pop();
                auto children = apply_split(tree, pn.node, pn.samples, pn.split);
                ++leaves;
                for (auto& [id, s] : children) {
                    Pending c{id, std::move(s), pn.depth + 1, {}};
                    c.split = best_split(c.samples);
                    if (c.split.feature >= 0) frontier.push(std::move(c));
                }
            }
        }
        return tree;
    }

private:
    TreeNode make_leaf(const std::vector<std::uint32_t>& samples) const {
        double G = 0, H = 0;
        for (auto i : samples) {
            G += g_[i];
            H += h_[i];
        }
        TreeNode n;
        n.value = p_.eta * (-G / (H + p_.lambda));
        return n;
    }

    SplitCandidate best_split(const std::vector<std::uint32_t>& samples) {
        SplitCandidate best;
        if (samples.size() < 2 * static_cast<std::size_t>(p_.min_samples_leaf)) return best;
        const std::size_t n = bins_.samples;
        double G = 0, H = 0;
        for (auto i : samples) {
            G += g_[i];
            H += h_[i];
        }
        const double parent = G * G / (H + p_.lambda);
        const long total = static_cast<long>(samples.size());
        for (std::size_t f = 0; f < bins_.features; ++f) {
            const int nb = static_cast<int>(bins_.edges[f].size());
            if (nb < 2) continue;
            const std::uint8_t* col = &bins_.codes[f * n];
            int lo = nb, hi = -1;
            for (auto i : samples) {
                const int c = col[i];
                Bin& b = hist_[c];
                b.g += g_[i];
                b.h += h_[i];
                ++b.n;
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
            // bins outside [lo, hi] are empty, so splits there leave one side empty
            double gl = 0, hl = 0;
            long nl = 0;
            for (int b = lo; b < hi; ++b) {
                gl += hist_[b].g;
                hl += hist_[b].h;
                nl += hist_[b].n;
                if (nl < p_.min_samples_leaf) continue;
                if (total - nl < p_.min_samples_leaf) break;
                const double gr = G - gl, hr = H - hl;
                const double gain = 0.5 * (gl * gl / (hl + p_.lambda) + gr * gr / (hr + p_.lambda) - parent);
                if (gain > best.gain + 1e-12) best = {gain, static_cast<std::int32_t>(f), b};
            }
            std::fill(hist_.begin() + lo, hist_.begin() + hi + 1, Bin{});
        }
        return best;
    }

    std::array<std::pair<std::int32_t, std::vector<std::uint32_t>>, 2> apply_split(
        RegressionTree& tree, std::int32_t node, const std::vector<std::uint32_t>& samples, const SplitCandidate& s) {
        std::vector<std::uint32_t> left, right;
        const std::uint8_t* col = &bins_.codes[static_cast<std::size_t>(s.feature) * bins_.samples];
        for (auto i : samples) (col[i] <= s.bin ? left : right).push_back(i);
        const auto l = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(make_leaf(left));
        tree.nodes.push_back(make_leaf(right));
        TreeNode& n = tree.nodes[node];
        n.feature = s.feature;
        n.threshold = bins_.edges[s.feature][s.bin];
        n.left = l;
        n.right = l + 1;
        n.value = 0.0;
        return {{{l, std::move(left)}, {l + 1, std::move(right)}}};
    }

    const Binning& bins_;
    const GbdtParams& p_;
    std::span<const double> g_, h_;
    struct Bin {
        double g = 0, h = 0;
        long n = 0;
    };
    std::vector<Bin> hist_;
};

inline void softmax_inplace(std::span<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (auto& v : z) {
        v = std::exp(v - mx);
        s += v;
    }
    for (auto& v : z) v /= s;
}

}  // namespace detail

/**
 * Multiclass gradient boosting on the softmax log-loss. Each round fits one
 * tree per class to (gradient p - y, hessian p(1-p)) using histogram splits
 * with gain 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] and leaf weight
 * -eta G/(H+l). Levelwise growth fills depth <= max_depth; leafwise growth
 * splits the best-gain leaf until max_leaves.
 */
inline GbdtModel gbdt_train(const Matrix& X, std::span<const ClassLabel> y, const GbdtParams& p = {}) {
    detail::check_training_data(X, y);
    TrainParams tp;
    tp.gbdt = p;
    tp.validate();
    GbdtModel m;
    m.classes = detail::present_classes(y);
    m.eta = p.eta;
    m.growth = p.growth;
    m.rounds = p.rounds;
    const std::size_t n = X.rows(), K = m.classes.size();
    std::array<int, kNumClasses> slot{};
    for (std::size_t k = 0; k < K; ++k) slot[m.classes[k]] = static_cast<int>(k);
    std::vector<int> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = slot[label_code(y[i])];

    const detail::Binning bins(X, p.bins);
    std::vector<double> F(n * K, 0.0), P(n * K), g(n), h(n);
    auto logloss = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s -= std::log(std::max(P[i * K + target[i]], 1e-300));
        return s / static_cast<double>(n);
    };
    auto refresh = [&] {
        P = F;
        for (std::size_t i = 0; i < n; ++i) detail::softmax_inplace({P.data() + i * K, K});
    };
    refresh();
    for (int r = 0; r < p.rounds; ++r) {
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double pk = P[i * K + k];
                g[i] = pk - (target[i] == static_cast<int>(k) ? 1.0 : 0.0);
                h[i] = std::max(pk * (1.0 - pk), 1e-16);
            }
            bool degenerate = false;
            detail::TreeBuilder builder(bins, p, g, h);
            m.trees.push_back(builder.build(&degenerate));
            if (degenerate) ++m.degenerate_trees;
        }
        for (std::size_t k = 0; k < K; ++k) {
            const auto& tree = m.trees[static_cast<std::size_t>(r) * K + k];
            for (std::size_t i = 0; i < n; ++i) F[i * K + k] += tree.predict(X.row(i));
        }
        refresh();
        m.train_logloss.push_back(logloss());
    }
    return m;
}

inline GbdtPrediction gbdt_predict(const GbdtModel& m, std::span<const double> x, std::size_t expected_dim) {
    require(x.size() == expected_dim, Errc::SignatureMismatch,
            "feature length " + std::to_string(x.size()) + " != model dim " + std::to_string(expected_dim));
    const std::size_t K = m.classes.size();
    std::vector<double> z(K, 0.0);
    for (std::size_t t = 0; t < m.trees.size(); ++t) z[t % K] += m.trees[t].predict(x);
    detail::softmax_inplace(z);
    GbdtPrediction out;
    std::size_t best = 0;
    for (std::size_t k = 0; k < K; ++k) {
        out.probabilities[m.classes[k]] = z[k];
        if (z[k] > z[best]) best = k;
    }
    out.label = label_from_code(m.classes[best]);
    out.score = z[best];
    return out;
}

}  // namespace pvdefect
