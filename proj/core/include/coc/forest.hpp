#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coc/features.hpp"
#include "coc/grade.hpp"

namespace coc::rf {

/// One node of a decision tree. Internal nodes route x[feature] <= threshold
/// to `left`, else to `right`. Leaves carry the bootstrap class counts.
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<double, kGradeCount> counts{};

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // preorder, root at 0

    const TreeNode& leaf_for(const std::array<double, feat::kFeatureCount>& x) const;
    std::array<double, kGradeCount> leaf_posterior(
        const std::array<double, feat::kFeatureCount>& x) const;
};

enum class WeightMode { uniform, oob_accuracy };

struct ForestParams {
    int n_trees = 100;
    int max_depth = 0; // 0 = unbounded
    int min_leaf = 1;
    int mtry = 6; // ceil(sqrt(31))
    std::uint64_t seed = 42;
    WeightMode weight_mode = WeightMode::uniform;
    /// Columns the splitter may use; prediction always takes full 31-vectors.
    std::array<bool, feat::kFeatureCount> feature_mask = all_features();

    static std::array<bool, feat::kFeatureCount> all_features() {
        std::array<bool, feat::kFeatureCount> m;
        m.fill(true);
        return m;
    }

    void validate() const;
};

struct ForestModel {
    std::vector<Tree> trees;
    std::vector<double> weights; // per-tree a_n, all > 0
    ForestParams params;
    double oob_error = 0.0;
    std::array<double, feat::kFeatureCount> importances{};
    std::string layout_version = feat::kLayoutVersion;
    /// Optional record of the stratified split used at training time
    /// (empty when the model was trained on every row).
    std::vector<std::string> train_ids;
};

struct GradePosterior {
    std::array<double, kGradeCount> p{};
};

using FeatureMatrix = std::vector<std::array<double, feat::kFeatureCount>>;

/// Trains n_trees CART trees on bootstrap samples (n draws with replacement,
/// per-tree stream seed ^ tree_index), Gini splits over mtry candidate
/// features, ties broken toward the lower (feature, threshold). Fills the
/// per-tree weights, OOB error and permutation importances.
ForestModel train(const FeatureMatrix& features, const std::vector<Grade>& labels,
                  const ForestParams& params);

/// Eq-style weighted average of the per-tree leaf posteriors,
/// p = sum_n a_n p_n / sum_n a_n. Throws incompatible_model on a layout
/// mismatch.
GradePosterior posterior(const ForestModel& model, const feat::FeatureVector& x);
GradePosterior posterior(const ForestModel& model,
                         const std::array<double, feat::kFeatureCount>& x);

/// Argmax grade; ties go to the lower ordinal. Throws invalid_posterior when
/// the components do not sum to 1 within 1e-6.
Grade assign(const GradePosterior& post);

/// Modal grade of a non-empty list, ties toward the lower ordinal.
Grade aggregate_votes(const std::vector<Grade>& votes);

/// Breiman permutation importance: for each feature, the mean over trees of
/// (tree OOB error with that column permuted within the tree's OOB rows -
/// tree OOB error). Bootstrap membership is recomputed from the stored seed,
/// so `features`/`labels` must be the training data. Raw values (possibly
/// negative) are returned.
std::array<double, feat::kFeatureCount> permutation_importance(
    const ForestModel& model, const FeatureMatrix& features,
    const std::vector<Grade>& labels, std::uint64_t seed);

/// Best Gini split of the index set over the candidate features: evaluates
/// every midpoint between consecutive distinct values, requires both children
/// >= min_leaf and a strictly positive impurity decrease.
struct Split {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};
Split best_split(const FeatureMatrix& features, const std::vector<Grade>& labels,
                 const std::vector<int>& sample_idx,
                 const std::vector<int>& candidate_features, int min_leaf);

/// Versioned JSON serialization; load(save(m)) is lossless including every
/// double bit pattern.
std::string to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_model(const std::filesystem::path& path);

} // namespace coc::rf
