#pragma once
#include <otids/preprocess.hpp>
#include <otids/types.hpp>
#include <json.hpp>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace otids {

/// Gini impurity 1 - sum p_k^2 of a class-count histogram.
template <class Count>
double gini(std::span<const Count> histogram)
{
    double total = 0.0;
    for (auto c : histogram) total += static_cast<double>(c);
    if (total <= 0) throw Error(ErrorCode::empty_node, "gini of an empty histogram");
    double sum_sq = 0.0;
    for (auto c : histogram) {
        const double p = static_cast<double>(c) / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

inline double gini(const std::vector<std::size_t>& histogram)
{
    return gini(std::span<const std::size_t>(histogram));
}

struct SplitCandidate
{
    Index feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

/// Exhaustive CART search over the candidate features: thresholds are
/// midpoints between consecutive distinct sorted values. Ties resolve to the
/// lowest feature, then the lowest threshold. Returns nullopt when no split
/// has positive decrease (or every split leaves a child below min_leaf).
std::optional<SplitCandidate> best_split(const Matrix& x, const Labels& y, int n_classes,
                                         std::span<const Index> rows,
                                         std::span<const Index> features,
                                         Index min_leaf = 1);

/// Decreases within this margin are treated as equal during split search.
inline constexpr double kSplitTieEpsilon = 1e-12;

struct ForestConfig
{
    int n_trees = 100;
    int max_depth = 0;          ///< 0 = unlimited
    int min_samples_leaf = 1;
    int features_per_split = 0; ///< 0 = floor(sqrt(n_features))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int threads = 1;

    int resolved_features(Index n_features) const;
};

struct TreeNode
{
    Index feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int predicted = 0;   ///< majority class of the routed rows (lowest on ties)
    std::vector<std::size_t> histogram;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree
{
    std::vector<TreeNode> nodes; ///< nodes[0] is the root
    std::uint64_t seed = 0;
    IndexList oob_rows;

    int predict(const Eigen::Ref<const RowVector>& x) const;
    int depth() const;
};

struct TrainedForest
{
    ForestConfig config;
    Index n_features = 0;
    int n_classes = 0;
    int features_per_split = 0;
    std::vector<DecisionTree> trees;
    Vector gini_importance;
};

TrainedForest train_forest(const FeatureMatrix& m, const Labels& labels, const ForestConfig& config);

Labels predict_forest(const TrainedForest& f, const FeatureMatrix& m);
/// rows x n_classes matrix of vote fractions.
Matrix predict_proba(const TrainedForest& f, const FeatureMatrix& m);

/// Accuracy drop when one column is shuffled, averaged over `repeats`.
Vector permutation_importance(const TrainedForest& f, const FeatureMatrix& m, const Labels& labels,
                              int repeats, std::uint64_t seed);

/// Per-tree out-of-bag variant: each tree is scored on the rows it did not
/// see, with the column shuffled among those rows; averaged over trees.
/// `m` and `labels` must be the training data.
Vector oob_permutation_importance(const TrainedForest& f, const FeatureMatrix& m, const Labels& labels,
                                  int repeats, std::uint64_t seed);

nlohmann::json to_json(const ForestConfig& c);
ForestConfig forest_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainedForest& f);
TrainedForest forest_from_json(const nlohmann::json& j);

} // namespace otids
