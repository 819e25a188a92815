#include "coc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include <fstream>

#include "coc/error.hpp"
#include "coc/image_io.hpp"
#include "coc/parallel.hpp"
#include "coc/rng.hpp"

namespace coc::rf {

using json = nlohmann::ordered_json;

void ForestParams::validate() const {
    if (n_trees < 1) fail(errc::invalid_params, "n_trees must be >= 1");
    if (max_depth < 0) fail(errc::invalid_params, "max_depth must be >= 0");
    if (min_leaf < 1) fail(errc::invalid_params, "min_leaf must be >= 1");
    if (mtry < 1 || mtry > feat::kFeatureCount)
        fail(errc::invalid_params, "mtry must be in [1, 31]");
    bool any = false;
    for (bool b : feature_mask) any = any || b;
    if (!any) fail(errc::invalid_params, "feature mask excludes every column");
}

const TreeNode& Tree::leaf_for(const std::array<double, feat::kFeatureCount>& x) const {
    int idx = 0;
    while (!nodes[idx].is_leaf())
        idx = x[nodes[idx].feature] <= nodes[idx].threshold ? nodes[idx].left
                                                            : nodes[idx].right;
    return nodes[idx];
}

std::array<double, kGradeCount> Tree::leaf_posterior(
    const std::array<double, feat::kFeatureCount>& x) const {
    const TreeNode& leaf = leaf_for(x);
    double total = 0.0;
    for (double c : leaf.counts) total += c;
    std::array<double, kGradeCount> p{};
    for (int g = 0; g < kGradeCount; ++g) p[g] = leaf.counts[g] / total;
    return p;
}

namespace {

double gini(const std::array<std::int64_t, kGradeCount>& counts, std::int64_t n) {
    double g = 1.0;
    for (std::int64_t c : counts) {
        const double f = static_cast<double>(c) / static_cast<double>(n);
        g -= f * f;
    }
    return g;
}

/// Impurity decrease of splitting `total` counts into `left` and the
/// remainder. Shared formula for the trainer and the test oracle: both feed
/// it exact integer counts, so results compare bit-for-bit.
double split_gain(const std::array<std::int64_t, kGradeCount>& total, std::int64_t n,
                  const std::array<std::int64_t, kGradeCount>& left, std::int64_t n_left) {
    std::array<std::int64_t, kGradeCount> right{};
    for (int g = 0; g < kGradeCount; ++g) right[g] = total[g] - left[g];
    const std::int64_t n_right = n - n_left;
    const double wl = static_cast<double>(n_left) / static_cast<double>(n);
    const double wr = static_cast<double>(n_right) / static_cast<double>(n);
    return gini(total, n) - wl * gini(left, n_left) - wr * gini(right, n_right);
}

} // namespace

Split best_split(const FeatureMatrix& features, const std::vector<Grade>& labels,
                 const std::vector<int>& sample_idx,
                 const std::vector<int>& candidate_features, int min_leaf) {
    const std::int64_t n = static_cast<std::int64_t>(sample_idx.size());
    std::array<std::int64_t, kGradeCount> total{};
    for (int i : sample_idx) ++total[static_cast<int>(labels[i])];

    Split best;
    std::vector<int> order;
    for (int f : candidate_features) {
        order.assign(sample_idx.begin(), sample_idx.end());
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (features[a][f] != features[b][f]) return features[a][f] < features[b][f];
            return a < b;
        });

        std::array<std::int64_t, kGradeCount> left{};
        std::int64_t n_left = 0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            ++left[static_cast<int>(labels[order[k]])];
            ++n_left;
            const double v = features[order[k]][f];
            const double v_next = features[order[k + 1]][f];
            if (v == v_next) continue;
            if (n_left < min_leaf || n - n_left < min_leaf) continue;
            const double gain = split_gain(total, n, left, n_left);
            const double threshold = v + 0.5 * (v_next - v);
            // Strict improvement wins; exact ties fall to the lower
            // (feature, threshold) because candidates scan in that order.
            if (gain > best.gain && gain > 0.0) {
                best.valid = true;
                best.feature = f;
                best.threshold = threshold;
                best.gain = gain;
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const FeatureMatrix& features;
    const std::vector<Grade>& labels;
    const ForestParams& params;
    const std::vector<int>& allowed; // unmasked feature indices, ascending
    Rng& rng;
    Tree tree;

    int build(std::vector<int>&& idx, int depth) {
        std::array<std::int64_t, kGradeCount> counts{};
        for (int i : idx) ++counts[static_cast<int>(labels[i])];
        const int me = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool pure =
            std::count_if(counts.begin(), counts.end(), [](std::int64_t c) { return c > 0; }) <= 1;
        const bool depth_stop = params.max_depth > 0 && depth >= params.max_depth;
        Split split;
        if (!pure && !depth_stop &&
            static_cast<int>(idx.size()) >= 2 * params.min_leaf) {
            // Candidate order: random permutation of the allowed features;
            // the first mtry are evaluated, and the scan extends past mtry
            // only while no valid split has been found.
            std::vector<int> perm = allowed;
            rng.shuffle(perm);
            std::vector<int> group;
            std::size_t pos = 0;
            while (pos < perm.size()) {
                const std::size_t take = std::min<std::size_t>(
                    pos == 0 ? static_cast<std::size_t>(params.mtry) : 1, perm.size() - pos);
                group.assign(perm.begin() + pos, perm.begin() + pos + take);
                std::sort(group.begin(), group.end());
                const Split s = best_split(features, labels, idx, group, params.min_leaf);
                if (s.valid && (!split.valid || s.gain > split.gain ||
                                (s.gain == split.gain &&
                                 (s.feature < split.feature ||
                                  (s.feature == split.feature && s.threshold < split.threshold))))) {
                    split = s;
                }
                pos += take;
                if (split.valid && pos >= static_cast<std::size_t>(params.mtry)) break;
            }
        }

        if (!split.valid) {
            for (int g = 0; g < kGradeCount; ++g)
                tree.nodes[me].counts[g] = static_cast<double>(counts[g]);
            return me;
        }

        std::vector<int> left_idx, right_idx;
        for (int i : idx) {
            if (features[i][split.feature] <= split.threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        tree.nodes[me].feature = split.feature;
        tree.nodes[me].threshold = split.threshold;
        const int l = build(std::move(left_idx), depth + 1);
        const int r = build(std::move(right_idx), depth + 1);
        tree.nodes[me].left = l;
        tree.nodes[me].right = r;
        return me;
    }
};

std::vector<int> bootstrap_sample(int n, Rng& rng) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = static_cast<int>(rng.next_below(n));
    return idx;
}

std::vector<bool> in_bag_flags(const std::vector<int>& bootstrap, int n) {
    std::vector<bool> in_bag(n, false);
    for (int i : bootstrap) in_bag[i] = true;
    return in_bag;
}

constexpr std::uint64_t kImportanceSalt = 0x494D504F52545ULL;

} // namespace

ForestModel train(const FeatureMatrix& features, const std::vector<Grade>& labels,
                  const ForestParams& params) {
    params.validate();
    const int n = static_cast<int>(features.size());
    if (n == 0) fail(errc::empty_training_set, "no training samples");
    if (labels.size() != features.size())
        fail(errc::invalid_data, "label count does not match sample count");
    for (const auto& row : features)
        for (double v : row)
            if (!std::isfinite(v)) fail(errc::invalid_data, "non-finite feature value");

    std::vector<int> allowed;
    for (int f = 0; f < feat::kFeatureCount; ++f)
        if (params.feature_mask[f]) allowed.push_back(f);

    ForestModel model;
    model.params = params;
    model.trees.resize(params.n_trees);
    model.weights.assign(params.n_trees, 1.0);

    parallel_for(params.n_trees, [&](int t) {
        Rng rng(params.seed ^ static_cast<std::uint64_t>(t));
        std::vector<int> boot = bootstrap_sample(n, rng);
        TreeBuilder builder{features, labels, params, allowed, rng, Tree{}};
        builder.build(std::move(boot), 0);
        model.trees[t] = std::move(builder.tree);
    });

    // Per-tree OOB accuracy (optionally the weights), then the forest-level
    // OOB error via the weighted posterior over excluding trees.
    std::vector<double> tree_acc(params.n_trees, 0.5);
    std::vector<std::vector<bool>> in_bag(params.n_trees);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(params.seed ^ static_cast<std::uint64_t>(t));
        in_bag[t] = in_bag_flags(bootstrap_sample(n, rng), n);
    }
    for (int t = 0; t < params.n_trees; ++t) {
        std::int64_t hits = 0, total = 0;
        for (int i = 0; i < n; ++i) {
            if (in_bag[t][i]) continue;
            ++total;
            const auto p = model.trees[t].leaf_posterior(features[i]);
            const int pred = static_cast<int>(
                std::max_element(p.begin(), p.end()) - p.begin());
            if (pred == static_cast<int>(labels[i])) ++hits;
        }
        if (total > 0) tree_acc[t] = static_cast<double>(hits) / static_cast<double>(total);
    }
    if (params.weight_mode == WeightMode::oob_accuracy) {
        for (int t = 0; t < params.n_trees; ++t)
            model.weights[t] = std::max(0.01, tree_acc[t]);
    }

    std::int64_t wrong = 0, evaluated = 0;
    for (int i = 0; i < n; ++i) {
        std::array<double, kGradeCount> acc{};
        double wsum = 0.0;
        for (int t = 0; t < params.n_trees; ++t) {
            if (in_bag[t][i]) continue;
            const auto p = model.trees[t].leaf_posterior(features[i]);
            for (int g = 0; g < kGradeCount; ++g) acc[g] += model.weights[t] * p[g];
            wsum += model.weights[t];
        }
        if (wsum == 0.0) continue; // sample never out of bag
        ++evaluated;
        const int pred = static_cast<int>(std::max_element(acc.begin(), acc.end()) - acc.begin());
        if (pred != static_cast<int>(labels[i])) ++wrong;
    }
    model.oob_error = evaluated > 0
                          ? static_cast<double>(wrong) / static_cast<double>(evaluated)
                          : 0.0;

    model.importances =
        permutation_importance(model, features, labels, mix_seed(params.seed, kImportanceSalt));
    return model;
}

GradePosterior posterior(const ForestModel& model,
                         const std::array<double, feat::kFeatureCount>& x) {
    std::array<double, kGradeCount> acc{};
    double wsum = 0.0;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto p = model.trees[t].leaf_posterior(x);
        for (int g = 0; g < kGradeCount; ++g) acc[g] += model.weights[t] * p[g];
        wsum += model.weights[t];
    }
    GradePosterior out;
    for (int g = 0; g < kGradeCount; ++g) out.p[g] = acc[g] / wsum;
    return out;
}

GradePosterior posterior(const ForestModel& model, const feat::FeatureVector& x) {
    if (x.layout_version != model.layout_version)
        fail(errc::incompatible_model,
             "feature layout " + x.layout_version + " does not match model layout " +
                 model.layout_version);
    return posterior(model, x.values);
}

Grade assign(const GradePosterior& post) {
    double sum = 0.0;
    for (double v : post.p) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            fail(errc::invalid_posterior, "posterior component outside [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        fail(errc::invalid_posterior, "posterior does not sum to 1");
    int best = 0;
    for (int g = 1; g < kGradeCount; ++g)
        if (post.p[g] > post.p[best]) best = g;
    return static_cast<Grade>(best);
}

Grade aggregate_votes(const std::vector<Grade>& votes) {
    if (votes.empty()) fail(errc::empty_input, "no votes to aggregate");
    std::array<std::int64_t, kGradeCount> counts{};
    for (Grade g : votes) ++counts[static_cast<int>(g)];
    int best = 0;
    for (int g = 1; g < kGradeCount; ++g)
        if (counts[g] > counts[best]) best = g;
    return static_cast<Grade>(best);
}

std::array<double, feat::kFeatureCount> permutation_importance(
    const ForestModel& model, const FeatureMatrix& features,
    const std::vector<Grade>& labels, std::uint64_t seed) {
    const int n = static_cast<int>(features.size());
    if (n == 0) fail(errc::empty_training_set, "no samples");
    const int n_trees = static_cast<int>(model.trees.size());

    std::array<double, feat::kFeatureCount> importance{};
    std::vector<std::array<double, feat::kFeatureCount>> per_tree(
        n_trees, std::array<double, feat::kFeatureCount>{});
    std::vector<int> oob_trees;

    parallel_for(n_trees, [&](int t) {
        Rng boot_rng(model.params.seed ^ static_cast<std::uint64_t>(t));
        const std::vector<bool> in_bag = in_bag_flags(bootstrap_sample(n, boot_rng), n);
        std::vector<int> oob;
        for (int i = 0; i < n; ++i)
            if (!in_bag[i]) oob.push_back(i);
        if (oob.empty()) return;

        auto tree_error = [&](const std::vector<std::array<double, feat::kFeatureCount>>& rows) {
            std::int64_t wrong = 0;
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const auto p = model.trees[t].leaf_posterior(rows[k]);
                const int pred =
                    static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
                if (pred != static_cast<int>(labels[oob[k]])) ++wrong;
            }
            return static_cast<double>(wrong) / static_cast<double>(rows.size());
        };

        std::vector<std::array<double, feat::kFeatureCount>> rows;
        rows.reserve(oob.size());
        for (int i : oob) rows.push_back(features[i]);
        const double baseline = tree_error(rows);

        for (int f = 0; f < feat::kFeatureCount; ++f) {
            std::vector<int> perm(oob.size());
            std::iota(perm.begin(), perm.end(), 0);
            Rng perm_rng(mix_seed(seed, static_cast<std::uint64_t>(t),
                                  static_cast<std::uint64_t>(f)));
            perm_rng.shuffle(perm);
            auto permuted = rows;
            for (std::size_t k = 0; k < oob.size(); ++k)
                permuted[k][f] = rows[perm[k]][f];
            per_tree[t][f] = tree_error(permuted) - baseline;
        }
    });

    int counted = 0;
    for (int t = 0; t < n_trees; ++t) {
        Rng boot_rng(model.params.seed ^ static_cast<std::uint64_t>(t));
        const std::vector<bool> in_bag = in_bag_flags(bootstrap_sample(n, boot_rng), n);
        if (std::find(in_bag.begin(), in_bag.end(), false) == in_bag.end()) continue;
        ++counted;
        for (int f = 0; f < feat::kFeatureCount; ++f) importance[f] += per_tree[t][f];
    }
    if (counted > 0)
        for (double& v : importance) v /= static_cast<double>(counted);
    return importance;
}

namespace {

json node_to_json(const TreeNode& n) {
    if (n.is_leaf()) {
        return json{{"counts", n.counts}};
    }
    return json{{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}};
}

TreeNode node_from_json(const json& j) {
    TreeNode n;
    if (j.contains("counts")) {
        const auto c = j.at("counts").get<std::vector<double>>();
        if (c.size() != kGradeCount) fail(errc::invalid_data, "leaf counts must have 4 entries");
        std::copy(c.begin(), c.end(), n.counts.begin());
        double total = 0.0;
        for (double v : c) {
            if (v < 0.0) fail(errc::invalid_data, "negative leaf count");
            total += v;
        }
        if (total <= 0.0) fail(errc::invalid_data, "leaf histogram has no mass");
    } else {
        n.feature = j.at("f").get<int>();
        n.threshold = j.at("t").get<double>();
        n.left = j.at("l").get<int>();
        n.right = j.at("r").get<int>();
        if (n.feature < 0 || n.feature >= feat::kFeatureCount)
            fail(errc::invalid_data, "node feature index out of range");
    }
    return n;
}

const char* weight_mode_name(WeightMode m) {
    return m == WeightMode::uniform ? "uniform" : "oob_accuracy";
}

WeightMode weight_mode_from(const std::string& s) {
    if (s == "uniform") return WeightMode::uniform;
    if (s == "oob_accuracy") return WeightMode::oob_accuracy;
    fail(errc::invalid_data, "unknown weight mode '" + s + "'");
}

} // namespace

std::string to_json(const ForestModel& model) {
    json j;
    j["format_version"] = 1;
    json params;
    params["trees"] = model.params.n_trees;
    params["max_depth"] = model.params.max_depth;
    params["min_leaf"] = model.params.min_leaf;
    params["mtry"] = model.params.mtry;
    params["seed"] = model.params.seed;
    params["weight_mode"] = weight_mode_name(model.params.weight_mode);
    params["feature_mask"] = model.params.feature_mask;
    j["params"] = params;
    j["layout_version"] = model.layout_version;
    j["weights"] = model.weights;
    j["oob_error"] = model.oob_error;
    j["importances"] = model.importances;
    if (!model.train_ids.empty()) j["train_ids"] = model.train_ids;
    json trees = json::array();
    for (const Tree& t : model.trees) {
        json nodes = json::array();
        for (const TreeNode& n : t.nodes) nodes.push_back(node_to_json(n));
        trees.push_back(json{{"nodes", nodes}});
    }
    j["trees"] = trees;
    return j.dump(2) + "\n";
}

ForestModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(errc::invalid_data, std::string("model JSON parse error: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            fail(errc::invalid_data, "unsupported model format_version");
        ForestModel m;
        const json& p = j.at("params");
        m.params.n_trees = p.at("trees").get<int>();
        m.params.max_depth = p.at("max_depth").get<int>();
        m.params.min_leaf = p.at("min_leaf").get<int>();
        m.params.mtry = p.at("mtry").get<int>();
        m.params.seed = p.at("seed").get<std::uint64_t>();
        m.params.weight_mode = weight_mode_from(p.at("weight_mode").get<std::string>());
        if (p.contains("feature_mask")) {
            const auto mask = p.at("feature_mask").get<std::vector<bool>>();
            if (mask.size() != feat::kFeatureCount)
                fail(errc::invalid_data, "feature_mask must have 31 entries");
            std::copy(mask.begin(), mask.end(), m.params.feature_mask.begin());
        }
        m.layout_version = j.at("layout_version").get<std::string>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.oob_error = j.at("oob_error").get<double>();
        const auto imp = j.at("importances").get<std::vector<double>>();
        if (imp.size() != feat::kFeatureCount)
            fail(errc::invalid_data, "importances must have 31 entries");
        std::copy(imp.begin(), imp.end(), m.importances.begin());
        if (j.contains("train_ids"))
            m.train_ids = j.at("train_ids").get<std::vector<std::string>>();
        for (const json& tj : j.at("trees")) {
            Tree t;
            for (const json& nj : tj.at("nodes")) t.nodes.push_back(node_from_json(nj));
            if (t.nodes.empty()) fail(errc::invalid_data, "tree without nodes");
            m.trees.push_back(std::move(t));
        }
        if (m.trees.size() != m.weights.size())
            fail(errc::invalid_data, "weights do not match tree count");
        for (double w : m.weights)
            if (!(w > 0.0)) fail(errc::invalid_data, "tree weights must be positive");
        return m;
    } catch (const json::exception& e) {
        fail(errc::invalid_data, std::string("model JSON schema error: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ForestModel& model) {
    atomic_write_file(path, to_json(model));
}

ForestModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open model " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

} // namespace coc::rf
