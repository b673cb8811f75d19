#include <otids/forest.hpp>
#include <otids/random.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace otids {

namespace {

int argmax_lowest(std::span<const std::size_t> counts)
{
    int best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    return best;
}

double midpoint(double a, double b)
{
    const double m = (a + b) / 2;
    return m < b ? m : a;
}

void check_training_input(const FeatureMatrix& m, const Labels& labels)
{
    if (labels.size() != m.rows()) {
        throw Error(ErrorCode::length_mismatch, "label count differs from row count");
    }
    if (m.rows() == 0) throw Error(ErrorCode::empty_input, "no training rows");
    if (!m.complete()) throw Error(ErrorCode::not_interpolated, "training matrix has missing cells");
    if (!m.values.allFinite()) throw Error(ErrorCode::not_finite, "training matrix has non-finite values");
    if (labels.minCoeff() < 0) throw Error(ErrorCode::invalid_config, "class labels must be non-negative");
}

int resolve_threads(int requested)
{
    if (requested > 0) return requested;
    const auto hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

struct TreeBuild
{
    DecisionTree tree;
    Vector importance;
};

TreeBuild grow_tree(const Matrix& x, const Labels& y, int n_classes, const ForestConfig& cfg,
                    int mtry, std::uint64_t tree_seed)
{
    const Index n = x.rows();
    const Index p = x.cols();
    Rng rng(tree_seed);

    TreeBuild out;
    out.tree.seed = tree_seed;
    out.importance = Vector::Zero(p);

    IndexList sample;
    sample.reserve(static_cast<std::size_t>(n));
    if (cfg.bootstrap) {
        std::vector<bool> in_bag(static_cast<std::size_t>(n), false);
        for (Index i = 0; i < n; ++i) {
            const auto r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
            sample.push_back(r);
            in_bag[static_cast<std::size_t>(r)] = true;
        }
        for (Index i = 0; i < n; ++i) {
            if (!in_bag[static_cast<std::size_t>(i)]) out.tree.oob_rows.push_back(i);
        }
    } else {
        sample = all_rows(n);
    }
    const double root_size = static_cast<double>(sample.size());

    struct Pending
    {
        std::int32_t node;
        IndexList rows;
        int depth;
    };
    std::vector<Pending> stack;
    out.tree.nodes.emplace_back();
    stack.push_back({0, std::move(sample), 0});

    std::vector<Index> order(static_cast<std::size_t>(p));
    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();

        std::vector<std::size_t> hist(static_cast<std::size_t>(n_classes), 0);
        for (auto r : job.rows) ++hist[static_cast<std::size_t>(y(r))];
        {
            auto& node = out.tree.nodes[static_cast<std::size_t>(job.node)];
            node.histogram = hist;
            node.predicted = argmax_lowest(hist);
        }

        const auto classes_present = std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; });
        const bool depth_capped = cfg.max_depth > 0 && job.depth >= cfg.max_depth;
        if (classes_present < 2 || depth_capped ||
            job.rows.size() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
            continue;
        }

        // Draw the per-node candidate set; when it yields no usable split the
        // remaining features are tried so constant candidates do not stop growth.
        std::iota(order.begin(), order.end(), Index{0});
        std::optional<SplitCandidate> split;
        if (mtry >= p) {
            split = best_split(x, y, n_classes, job.rows, order, cfg.min_samples_leaf);
        } else {
            rng.shuffle(order);
            std::vector<Index> head(order.begin(), order.begin() + mtry);
            std::vector<Index> tail(order.begin() + mtry, order.end());
            std::sort(head.begin(), head.end());
            std::sort(tail.begin(), tail.end());
            split = best_split(x, y, n_classes, job.rows, head, cfg.min_samples_leaf);
            if (!split) split = best_split(x, y, n_classes, job.rows, tail, cfg.min_samples_leaf);
        }
        if (!split) continue;

        IndexList left_rows, right_rows;
        for (auto r : job.rows) {
            (x(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
        }
        out.importance(split->feature) +=
            static_cast<double>(job.rows.size()) / root_size * split->impurity_decrease;

        const auto left_id = static_cast<std::int32_t>(out.tree.nodes.size());
        out.tree.nodes.emplace_back();
        out.tree.nodes.emplace_back();
        auto& node = out.tree.nodes[static_cast<std::size_t>(job.node)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = left_id;
        node.right = left_id + 1;
        stack.push_back({left_id + 1, std::move(right_rows), job.depth + 1});
        stack.push_back({left_id, std::move(left_rows), job.depth + 1});
    }
    return out;
}

} // namespace

std::optional<SplitCandidate> best_split(const Matrix& x, const Labels& y, int n_classes,
                                         std::span<const Index> rows,
                                         std::span<const Index> features, Index min_leaf)
{
    const auto n = rows.size();
    if (n < 2) return std::nullopt;
    std::vector<std::size_t> parent(static_cast<std::size_t>(n_classes), 0);
    for (auto r : rows) ++parent[static_cast<std::size_t>(y(r))];
    const double g_parent = gini(parent);
    if (g_parent <= 0) return std::nullopt;

    std::vector<Index> feats(features.begin(), features.end());
    std::sort(feats.begin(), feats.end());

    std::optional<SplitCandidate> best;
    std::vector<std::pair<double, int>> column(n);
    std::vector<std::size_t> left(parent.size()), right(parent.size());
    const double total = static_cast<double>(n);
    for (auto f : feats) {
        for (std::size_t i = 0; i < n; ++i) column[i] = {x(rows[i], f), y(rows[i])};
        std::sort(column.begin(), column.end());
        std::fill(left.begin(), left.end(), 0);
        right = parent;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const auto cls = static_cast<std::size_t>(column[k].second);
            ++left[cls];
            --right[cls];
            if (!(column[k].first < column[k + 1].first)) continue;
            const auto n_left = k + 1;
            const auto n_right = n - n_left;
            if (static_cast<Index>(n_left) < min_leaf || static_cast<Index>(n_right) < min_leaf) continue;
            const double decrease = g_parent - static_cast<double>(n_left) / total * gini(left) -
                                    static_cast<double>(n_right) / total * gini(right);
            const double floor = best ? best->impurity_decrease : 0.0;
            if (decrease > floor + kSplitTieEpsilon) {
                best = SplitCandidate{f, midpoint(column[k].first, column[k + 1].first), decrease};
            }
        }
    }
    return best;
}

int ForestConfig::resolved_features(Index n_features) const
{
    if (features_per_split > 0) return static_cast<int>(std::min<Index>(features_per_split, n_features));
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

int DecisionTree::predict(const Eigen::Ref<const RowVector>& x) const
{
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& node = nodes[i];
        i = static_cast<std::size_t>(x(node.feature) <= node.threshold ? node.left : node.right);
    }
    return nodes[i].predicted;
}

int DecisionTree::depth() const
{
    std::vector<int> d(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

TrainedForest train_forest(const FeatureMatrix& m, const Labels& labels, const ForestConfig& config)
{
    if (config.n_trees < 1) throw Error(ErrorCode::invalid_config, "n_trees must be >= 1");
    if (config.min_samples_leaf < 1) throw Error(ErrorCode::invalid_config, "min_samples_leaf must be >= 1");
    if (config.max_depth < 0) throw Error(ErrorCode::invalid_config, "max_depth must be >= 0");
    check_training_input(m, labels);
    const int n_classes = labels.maxCoeff() + 1;
    {
        std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
        for (Index i = 0; i < labels.size(); ++i) seen[static_cast<std::size_t>(labels(i))] = true;
        if (std::count(seen.begin(), seen.end(), true) < 2) {
            throw Error(ErrorCode::degenerate_labels, "training labels contain a single class");
        }
    }

    TrainedForest f;
    f.config = config;
    f.n_features = m.cols();
    f.n_classes = n_classes;
    f.features_per_split = config.resolved_features(m.cols());
    f.trees.resize(static_cast<std::size_t>(config.n_trees));
    std::vector<Vector> importances(f.trees.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < f.trees.size();) {
            auto built = grow_tree(m.values, labels, n_classes, config, f.features_per_split,
                                   derive_seed(config.seed, static_cast<std::uint64_t>(t)));
            f.trees[t] = std::move(built.tree);
            importances[t] = std::move(built.importance);
        }
    };
    const int n_threads = std::min(resolve_threads(config.threads), config.n_trees);
    std::vector<std::jthread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    pool.clear();

    f.gini_importance = Vector::Zero(m.cols());
    for (const auto& imp : importances) f.gini_importance += imp;
    const double total = f.gini_importance.sum();
    if (total > 0) f.gini_importance /= total;
    return f;
}

Matrix predict_proba(const TrainedForest& f, const FeatureMatrix& m)
{
    if (m.cols() != f.n_features) {
        throw Error(ErrorCode::shape_mismatch, "forest expects " + std::to_string(f.n_features) +
                                                   " columns, got " + std::to_string(m.cols()));
    }
    Matrix votes = Matrix::Zero(m.rows(), f.n_classes);
    for (Index i = 0; i < m.rows(); ++i) {
        for (const auto& tree : f.trees) votes(i, tree.predict(m.values.row(i))) += 1.0;
    }
    return votes / static_cast<double>(f.trees.size());
}

Labels predict_forest(const TrainedForest& f, const FeatureMatrix& m)
{
    const Matrix proba = predict_proba(f, m);
    Labels out(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        Index best = 0;
        for (Index k = 1; k < proba.cols(); ++k) {
            if (proba(i, k) > proba(i, best)) best = k;
        }
        out(i) = static_cast<int>(best);
    }
    return out;
}

namespace {

double accuracy_of(const Labels& predicted, const Labels& truth)
{
    return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(truth.size());
}

void check_importance_args(const TrainedForest& f, const FeatureMatrix& m, const Labels& labels, int repeats)
{
    if (repeats < 1) throw Error(ErrorCode::invalid_config, "repeats must be >= 1");
    if (labels.size() != m.rows()) throw Error(ErrorCode::length_mismatch, "label count differs from row count");
    if (m.rows() == 0) throw Error(ErrorCode::empty_input, "no rows to evaluate importance on");
    if (m.cols() != f.n_features) throw Error(ErrorCode::shape_mismatch, "column count differs from training");
}

} // namespace

Vector permutation_importance(const TrainedForest& f, const FeatureMatrix& m, const Labels& labels,
                              int repeats, std::uint64_t seed)
{
    check_importance_args(f, m, labels, repeats);
    const double baseline = accuracy_of(predict_forest(f, m), labels);
    Vector importance = Vector::Zero(m.cols());
    FeatureMatrix work = m;
    std::vector<double> column(static_cast<std::size_t>(m.rows()));
    for (Index j = 0; j < m.cols(); ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
        double acc_sum = 0.0;
        for (int r = 0; r < repeats; ++r) {
            for (Index i = 0; i < m.rows(); ++i) column[static_cast<std::size_t>(i)] = m.values(i, j);
            rng.shuffle(column);
            for (Index i = 0; i < m.rows(); ++i) work.values(i, j) = column[static_cast<std::size_t>(i)];
            acc_sum += accuracy_of(predict_forest(f, work), labels);
        }
        work.values.col(j) = m.values.col(j);
        importance(j) = baseline - acc_sum / repeats;
    }
    return importance;
}

Vector oob_permutation_importance(const TrainedForest& f, const FeatureMatrix& m, const Labels& labels,
                                  int repeats, std::uint64_t seed)
{
    check_importance_args(f, m, labels, repeats);
    if (!f.config.bootstrap) throw Error(ErrorCode::invalid_config, "forest was trained without bootstrap; no OOB rows");
    Vector importance = Vector::Zero(m.cols());
    int scored = 0;
    for (std::size_t t = 0; t < f.trees.size(); ++t) {
        const auto& tree = f.trees[t];
        const auto& oob = tree.oob_rows;
        if (oob.empty()) continue;
        ++scored;
        auto tree_accuracy = [&](Index col, const std::vector<double>* permuted) {
            std::size_t correct = 0;
            RowVector row;
            for (std::size_t i = 0; i < oob.size(); ++i) {
                row = m.values.row(oob[i]);
                if (permuted) row(col) = (*permuted)[i];
                correct += tree.predict(row) == labels(oob[i]);
            }
            return static_cast<double>(correct) / static_cast<double>(oob.size());
        };
        const double base = tree_accuracy(0, nullptr);
        std::vector<double> column(oob.size());
        for (Index j = 0; j < m.cols(); ++j) {
            Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(t)), static_cast<std::uint64_t>(j)));
            double acc_sum = 0.0;
            for (int r = 0; r < repeats; ++r) {
                for (std::size_t i = 0; i < oob.size(); ++i) column[i] = m.values(oob[i], j);
                rng.shuffle(column);
                acc_sum += tree_accuracy(j, &column);
            }
            importance(j) += base - acc_sum / repeats;
        }
    }
    if (scored > 0) importance /= scored;
    return importance;
}

nlohmann::json to_json(const ForestConfig& c)
{
    return {{"n_trees", c.n_trees},
            {"max_depth", c.max_depth},
            {"min_samples_leaf", c.min_samples_leaf},
            {"features_per_split", c.features_per_split},
            {"bootstrap", c.bootstrap},
            {"seed", c.seed}};
}

ForestConfig forest_config_from_json(const nlohmann::json& j)
{
    ForestConfig c;
    c.n_trees = j.value("n_trees", c.n_trees);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.features_per_split = j.value("features_per_split", c.features_per_split);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.seed = j.value("seed", c.seed);
    return c;
}

nlohmann::json to_json(const TrainedForest& f)
{
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : f.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            nlohmann::json node = {{"class", n.predicted}, {"hist", n.histogram}};
            if (!n.is_leaf()) {
                node["feature"] = n.feature;
                node["threshold"] = n.threshold;
                node["left"] = n.left;
                node["right"] = n.right;
            }
            nodes.push_back(std::move(node));
        }
        trees.push_back({{"seed", t.seed}, {"oob_rows", t.oob_rows}, {"nodes", std::move(nodes)}});
    }
    return {{"schema_version", 1},
            {"kind", "random_forest"},
            {"config", to_json(f.config)},
            {"n_features", f.n_features},
            {"n_classes", f.n_classes},
            {"features_per_split", f.features_per_split},
            {"gini_importance", std::vector<double>(f.gini_importance.data(),
                                                    f.gini_importance.data() + f.gini_importance.size())},
            {"trees", std::move(trees)}};
}

TrainedForest forest_from_json(const nlohmann::json& j)
{
    if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "random_forest") {
        throw Error(ErrorCode::parse_error, "not a version-1 random_forest document");
    }
    TrainedForest f;
    f.config = forest_config_from_json(j.at("config"));
    f.n_features = j.at("n_features").get<Index>();
    f.n_classes = j.at("n_classes").get<int>();
    f.features_per_split = j.at("features_per_split").get<int>();
    const auto imp = j.at("gini_importance").get<std::vector<double>>();
    f.gini_importance = Eigen::Map<const Vector>(imp.data(), static_cast<Index>(imp.size()));
    for (const auto& jt : j.at("trees")) {
        DecisionTree t;
        t.seed = jt.at("seed").get<std::uint64_t>();
        t.oob_rows = jt.at("oob_rows").get<IndexList>();
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            n.predicted = jn.at("class").get<int>();
            n.histogram = jn.at("hist").get<std::vector<std::size_t>>();
            if (jn.contains("feature")) {
                n.feature = jn.at("feature").get<Index>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<std::int32_t>();
                n.right = jn.at("right").get<std::int32_t>();
            }
            t.nodes.push_back(std::move(n));
        }
        f.trees.push_back(std::move(t));
    }
    return f;
}

} // namespace otids
