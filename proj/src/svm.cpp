#include <otids/svm.hpp>
#include <otids/random.hpp>
#include <algorithm>
#include <atomic>
#include <limits>
#include <list>
#include <thread>
#include <unordered_map>

namespace otids {

std::string_view to_string(KernelKind k)
{
    switch (k) {
        case KernelKind::linear: return "linear";
        case KernelKind::rbf: return "rbf";
        case KernelKind::polynomial: return "polynomial";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(std::string_view s)
{
    if (s == "linear") return KernelKind::linear;
    if (s == "rbf") return KernelKind::rbf;
    if (s == "polynomial" || s == "poly") return KernelKind::polynomial;
    throw Error(ErrorCode::invalid_config, "unknown kernel '" + std::string(s) + "'");
}

double auto_gamma(const Matrix& x)
{
    const double p = static_cast<double>(std::max<Index>(1, x.cols()));
    if (x.rows() == 0) return 1.0 / p;
    const RowVector mean = x.colwise().mean();
    const double mean_var = (x.rowwise() - mean).array().square().mean();
    return mean_var > 0 ? 1.0 / (p * mean_var) : 1.0 / p;
}

ClassWeights balanced_weights(const Labels& labels)
{
    const double n = static_cast<double>(labels.size());
    const double pos = static_cast<double>((labels.array() == 1).count());
    const double neg = n - pos;
    if (pos == 0 || neg == 0) return {};
    return {n / (2 * neg), n / (2 * pos)};
}

namespace {

constexpr double kTau = 1e-12;

/// LRU cache of kernel rows K(i, .) over a fixed training matrix.
class KernelRows
{
    const Matrix& x_;
    KernelSpec spec_;
    Vector sq_norms_;
    std::size_t capacity_;
    std::list<Index> lru_;
    std::unordered_map<Index, std::pair<Vector, std::list<Index>::iterator>> rows_;

public:
    KernelRows(const Matrix& x, KernelSpec spec, std::size_t cache_megabytes)
        : x_(x), spec_(std::move(spec)), sq_norms_(x.rowwise().squaredNorm())
    {
        const std::size_t row_bytes = static_cast<std::size_t>(std::max<Index>(1, x.rows())) * sizeof(double);
        capacity_ = std::max<std::size_t>(2, cache_megabytes * (1u << 20) / row_bytes);
    }

    double diag(Index i) const
    {
        switch (spec_.kind) {
            case KernelKind::rbf: return 1.0;
            case KernelKind::linear: return sq_norms_(i);
            case KernelKind::polynomial: return std::pow(*spec_.gamma * sq_norms_(i) + spec_.coef0, spec_.degree);
        }
        return 0.0;
    }

    const Vector& row(Index i)
    {
        if (auto it = rows_.find(i); it != rows_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.second);
            return it->second.first;
        }
        if (rows_.size() >= capacity_) {
            rows_.erase(lru_.back());
            lru_.pop_back();
        }
        Vector dots = x_ * x_.row(i).transpose();
        switch (spec_.kind) {
            case KernelKind::linear: break;
            case KernelKind::rbf:
                dots = (-*spec_.gamma * ((sq_norms_.array() + sq_norms_(i)) - 2.0 * dots.array()).max(0.0)).exp();
                break;
            case KernelKind::polynomial:
                dots = (*spec_.gamma * dots.array() + spec_.coef0).pow(spec_.degree);
                break;
        }
        lru_.push_front(i);
        auto [it, _] = rows_.emplace(i, std::make_pair(std::move(dots), lru_.begin()));
        return it->second.first;
    }
};

struct DualProblem
{
    Vector p;      ///< linear term
    Vector y;      ///< +-1
    Vector upper;  ///< per-variable box
    Vector alpha;  ///< initial point, feasible
    double tolerance;
    long max_iterations;
    bool track_objective = false;
};

struct DualSolution
{
    Vector alpha;
    Vector gradient;
    double rho = 0.0;
    bool converged = false;
    long iterations = 0;
    double gap = 0.0;
    std::vector<double> objective; ///< minimisation form
};

/// Two-variable SMO on  min 1/2 a'Qa + p'a,  y'a = const,  0 <= a <= upper,
/// with Q_ij = y_i y_j K_ij. Each step takes the maximal violating pair: the
/// first multiplier maximises -y G over the up-set, the second minimises it
/// over the low-set, i.e. the largest error difference.
DualSolution solve_dual(KernelRows& kernel, DualProblem prob)
{
    const Index n = prob.y.size();
    DualSolution sol;
    Vector& a = prob.alpha;
    Vector g = prob.p;
    for (Index s = 0; s < n; ++s) {
        if (a(s) != 0.0) g += (a(s) * prob.y(s)) * (prob.y.array() * kernel.row(s).array()).matrix();
    }
    auto objective = [&] { return 0.5 * a.dot(g + prob.p); };
    if (prob.track_objective) sol.objective.push_back(objective());

    const auto& y = prob.y;
    const auto& c = prob.upper;
    auto in_up = [&](Index t) { return (y(t) > 0 && a(t) < c(t)) || (y(t) < 0 && a(t) > 0); };
    auto in_low = [&](Index t) { return (y(t) > 0 && a(t) > 0) || (y(t) < 0 && a(t) < c(t)); };

    long iter = 0;
    while (true) {
        // second-order working set selection
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        Index i = -1, j = -1;
        for (Index t = 0; t < n; ++t) {
            const double v = -y(t) * g(t);
            if (in_up(t) && v > g_max) { g_max = v; i = t; }
            if (in_low(t) && v < g_min) g_min = v;
        }
        sol.gap = (i < 0 || g_min == std::numeric_limits<double>::infinity()) ? 0.0 : g_max - g_min;
        if (sol.gap < prob.tolerance) {
            sol.converged = true;
            break;
        }
        if (iter >= prob.max_iterations) break;
        ++iter;

        // Copies: fetching row j may evict row i from the cache.
        const Vector ki = kernel.row(i);
        double best_gain = -std::numeric_limits<double>::infinity();
        for (Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double b = g_max + y(t) * g(t);
            if (b <= 0) continue;
            double quad = kernel.diag(i) + kernel.diag(t) - 2 * ki(t);
            if (quad <= 0) quad = kTau;
            const double gain = b * b / quad;
            if (gain > best_gain) { best_gain = gain; j = t; }
        }
        const Vector kj = kernel.row(j);
        const double kii = kernel.diag(i), kjj = kernel.diag(j), kij = ki(j);
        const double old_ai = a(i), old_aj = a(j);
        const double ci = c(i), cj = c(j);

        if (y(i) != y(j)) {
            double quad = kii + kjj - 2 * kij;
            if (quad <= 0) quad = kTau;
            const double delta = (-g(i) - g(j)) / quad;
            const double diff = a(i) - a(j);
            a(i) += delta;
            a(j) += delta;
            if (diff > 0) {
                if (a(j) < 0) { a(j) = 0; a(i) = diff; }
            } else {
                if (a(i) < 0) { a(i) = 0; a(j) = -diff; }
            }
            if (diff > ci - cj) {
                if (a(i) > ci) { a(i) = ci; a(j) = ci - diff; }
            } else {
                if (a(j) > cj) { a(j) = cj; a(i) = cj + diff; }
            }
        } else {
            double quad = kii + kjj - 2 * kij;
            if (quad <= 0) quad = kTau;
            const double delta = (g(i) - g(j)) / quad;
            const double sum = a(i) + a(j);
            a(i) -= delta;
            a(j) += delta;
            if (sum > ci) {
                if (a(i) > ci) { a(i) = ci; a(j) = sum - ci; }
            } else {
                if (a(j) < 0) { a(j) = 0; a(i) = sum; }
            }
            if (sum > cj) {
                if (a(j) > cj) { a(j) = cj; a(i) = sum - cj; }
            } else {
                if (a(i) < 0) { a(i) = 0; a(j) = sum; }
            }
        }

        const double di = (a(i) - old_ai) * y(i);
        const double dj = (a(j) - old_aj) * y(j);
        g.array() += y.array() * (di * ki.array() + dj * kj.array());
        if (prob.track_objective) sol.objective.push_back(objective());
    }
    sol.iterations = iter;

    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    long n_free = 0;
    for (Index t = 0; t < n; ++t) {
        const double yg = y(t) * g(t);
        if (a(t) >= c(t)) {
            if (y(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (a(t) <= 0) {
            if (y(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2;
    sol.alpha = std::move(a);
    sol.gradient = std::move(g);
    return sol;
}

Vector signed_labels(const Labels& labels)
{
    Vector y(labels.size());
    for (Index i = 0; i < labels.size(); ++i) {
        const int l = labels(i);
        if (l == 1) y(i) = 1.0;
        else if (l == -1 || l == 0) y(i) = -1.0;
        else throw Error(ErrorCode::invalid_config, "SVM labels must be -1/+1 (or 0/1)");
    }
    return y;
}

KernelSpec resolve_kernel(KernelSpec spec, const Matrix& x)
{
    if (spec.kind != KernelKind::linear) {
        if (!spec.gamma) spec.gamma = auto_gamma(x);
        if (!(*spec.gamma > 0)) throw Error(ErrorCode::invalid_config, "kernel gamma must be positive");
    }
    if (spec.kind == KernelKind::polynomial && spec.degree < 1) {
        throw Error(ErrorCode::invalid_config, "polynomial degree must be >= 1");
    }
    return spec;
}

void check_matrix(const FeatureMatrix& m)
{
    if (m.rows() == 0) throw Error(ErrorCode::empty_input, "no training rows");
    if (!m.complete()) throw Error(ErrorCode::not_interpolated, "training matrix has missing cells");
    if (!m.values.allFinite()) throw Error(ErrorCode::not_finite, "training matrix has non-finite values");
}

long iteration_budget(int max_passes, Index n)
{
    return static_cast<long>(std::max(1, max_passes)) * static_cast<long>(std::max<Index>(n, 10));
}

} // namespace

TrainedSvm train_svm(const FeatureMatrix& m, const Labels& labels, const SvmConfig& config)
{
    if (!(config.cost > 0)) throw Error(ErrorCode::invalid_config, "C must be positive");
    if (labels.size() != m.rows()) throw Error(ErrorCode::length_mismatch, "label count differs from row count");
    check_matrix(m);
    const Vector y = signed_labels(labels);
    if ((y.array() > 0).all() || (y.array() < 0).all()) {
        throw Error(ErrorCode::degenerate_labels, "SVM training needs both classes");
    }
    const ClassWeights w = config.class_weights.value_or(balanced_weights(labels));
    if (!(w.negative > 0 && w.positive > 0)) throw Error(ErrorCode::invalid_config, "class weights must be positive");

    TrainedSvm model;
    model.kernel = resolve_kernel(config.kernel, m.values);
    model.cost = config.cost;
    model.weights = w;

    const Index n = m.rows();
    DualProblem prob;
    prob.p = Vector::Constant(n, -1.0);
    prob.y = y;
    prob.upper.resize(n);
    for (Index i = 0; i < n; ++i) prob.upper(i) = config.cost * (y(i) > 0 ? w.positive : w.negative);
    prob.alpha = Vector::Zero(n);
    prob.tolerance = config.tolerance;
    prob.max_iterations = iteration_budget(config.max_passes, n);
    prob.track_objective = config.track_objective;

    KernelRows kernel(m.values, model.kernel, config.cache_megabytes);
    auto sol = solve_dual(kernel, std::move(prob));

    model.bias = sol.rho;
    model.converged = sol.converged;
    model.iterations = sol.iterations;
    model.final_gap = sol.gap;
    for (double f : sol.objective) model.objective_history.push_back(-f);
    for (Index i = 0; i < n; ++i) {
        if (sol.alpha(i) > 0) model.support_indices.push_back(i);
    }
    const auto n_sv = static_cast<Index>(model.support_indices.size());
    model.support_vectors.resize(n_sv, m.cols());
    model.alpha.resize(n_sv);
    model.y.resize(n_sv);
    for (Index s = 0; s < n_sv; ++s) {
        const auto i = model.support_indices[static_cast<std::size_t>(s)];
        model.support_vectors.row(s) = m.values.row(i);
        model.alpha(s) = sol.alpha(i);
        model.y(s) = y(i);
    }
    return model;
}

double margin(const TrainedSvm& svm, const Eigen::Ref<const RowVector>& x)
{
    if (x.size() != svm.support_vectors.cols()) {
        throw Error(ErrorCode::shape_mismatch, "SVM expects " + std::to_string(svm.support_vectors.cols()) +
                                                   " features, got " + std::to_string(x.size()));
    }
    double sum = 0.0;
    for (Index s = 0; s < svm.alpha.size(); ++s) {
        sum += svm.alpha(s) * svm.y(s) * kernel_eval(svm.kernel, svm.support_vectors.row(s), x);
    }
    return sum - svm.bias;
}

int decide(const TrainedSvm& svm, const Eigen::Ref<const RowVector>& x)
{
    return margin(svm, x) >= 0 ? 1 : -1;
}

Labels decide(const TrainedSvm& svm, const FeatureMatrix& m)
{
    Labels out(m.rows());
    for (Index i = 0; i < m.rows(); ++i) out(i) = decide(svm, m.values.row(i));
    return out;
}

Vector kkt_residuals(const TrainedSvm& svm, const FeatureMatrix& m, const Labels& labels)
{
    const Vector y = signed_labels(labels);
    Vector alpha = Vector::Zero(m.rows());
    for (std::size_t s = 0; s < svm.support_indices.size(); ++s) {
        alpha(svm.support_indices[s]) = svm.alpha(static_cast<Index>(s));
    }
    Vector r(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        const double yf = y(i) * margin(svm, m.values.row(i));
        const double upper = svm.cost * (y(i) > 0 ? svm.weights.positive : svm.weights.negative);
        if (alpha(i) <= 0) r(i) = std::max(0.0, 1.0 - yf);
        else if (alpha(i) >= upper) r(i) = std::max(0.0, yf - 1.0);
        else r(i) = std::abs(yf - 1.0);
    }
    return r;
}

double dual_objective(const TrainedSvm& svm)
{
    const Index n = svm.alpha.size();
    double quad = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            quad += svm.alpha(i) * svm.alpha(j) * svm.y(i) * svm.y(j) *
                    kernel_eval(svm.kernel, svm.support_vectors.row(i), svm.support_vectors.row(j));
        }
    }
    return svm.alpha.sum() - 0.5 * quad;
}

OneClassSvm train_one_class(const FeatureMatrix& m, const OneClassConfig& config)
{
    if (!(config.nu > 0 && config.nu <= 1)) throw Error(ErrorCode::invalid_config, "nu must lie in (0, 1]");
    check_matrix(m);
    const Index n = m.rows();

    OneClassSvm model;
    model.kernel = resolve_kernel(config.kernel, m.values);
    model.nu = config.nu;

    // Solved in the scaled form 0 <= a <= 1, sum a = nu n; rescaled below.
    const double total = config.nu * static_cast<double>(n);
    DualProblem prob;
    prob.p = Vector::Zero(n);
    prob.y = Vector::Ones(n);
    prob.upper = Vector::Ones(n);
    prob.alpha = Vector::Zero(n);
    const auto n_full = static_cast<Index>(std::floor(total));
    for (Index i = 0; i < std::min(n_full, n); ++i) prob.alpha(i) = 1.0;
    if (n_full < n) prob.alpha(n_full) = total - static_cast<double>(n_full);
    prob.tolerance = config.tolerance;
    prob.max_iterations = iteration_budget(config.max_passes, n);

    KernelRows kernel(m.values, model.kernel, config.cache_megabytes);
    auto sol = solve_dual(kernel, std::move(prob));

    model.converged = sol.converged;
    model.iterations = sol.iterations;
    model.rho = sol.rho / total;
    model.boundary = config.tolerance / total;
    for (Index i = 0; i < n; ++i) {
        if (sol.alpha(i) > 0) model.support_indices.push_back(i);
    }
    const auto n_sv = static_cast<Index>(model.support_indices.size());
    model.support_vectors.resize(n_sv, m.cols());
    model.alpha.resize(n_sv);
    for (Index s = 0; s < n_sv; ++s) {
        const auto i = model.support_indices[static_cast<std::size_t>(s)];
        model.support_vectors.row(s) = m.values.row(i);
        model.alpha(s) = sol.alpha(i) / total;
    }
    return model;
}

double one_class_score(const OneClassSvm& model, const Eigen::Ref<const RowVector>& x)
{
    if (x.size() != model.support_vectors.cols()) throw Error(ErrorCode::shape_mismatch, "feature count differs");
    double sum = 0.0;
    for (Index s = 0; s < model.alpha.size(); ++s) {
        sum += model.alpha(s) * kernel_eval(model.kernel, model.support_vectors.row(s), x);
    }
    return sum - model.rho;
}

int one_class_decide(const OneClassSvm& model, const Eigen::Ref<const RowVector>& x)
{
    return one_class_score(model, x) >= -model.boundary ? 1 : -1;
}

Labels one_class_decide(const OneClassSvm& model, const FeatureMatrix& m)
{
    Labels out(m.rows());
    for (Index i = 0; i < m.rows(); ++i) out(i) = one_class_decide(model, m.values.row(i));
    return out;
}

GridSearchResult grid_search(const FeatureMatrix& m, const Labels& labels, const std::vector<SvmConfig>& grid,
                             int folds, std::uint64_t seed, int threads)
{
    if (grid.empty()) throw Error(ErrorCode::invalid_config, "empty grid");
    if (labels.size() != m.rows()) throw Error(ErrorCode::length_mismatch, "label count differs from row count");
    const Vector y = signed_labels(labels);
    Labels y01(labels.size());
    for (Index i = 0; i < y.size(); ++i) y01(i) = y(i) > 0 ? 1 : -1;
    const auto fold_of = stratified_kfold(y01, folds, seed);

    GridSearchResult result;
    result.mean_f1.assign(grid.size(), 0.0);
    result.fold_f1.assign(grid.size(), std::vector<double>(static_cast<std::size_t>(folds), 0.0));

    auto evaluate_config = [&](std::size_t g) {
        for (int f = 0; f < folds; ++f) {
            IndexList train, test;
            for (Index i = 0; i < m.rows(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
            Labels y_train(static_cast<Index>(train.size()));
            for (std::size_t k = 0; k < train.size(); ++k) y_train(static_cast<Index>(k)) = y01(train[k]);
            const auto model = train_svm(m.select_rows(train), y_train, grid[g]);
            const auto pred = decide(model, m.select_rows(test));
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t k = 0; k < test.size(); ++k) {
                const bool p = pred(static_cast<Index>(k)) == 1;
                const bool t = y01(test[k]) == 1;
                tp += p && t;
                fp += p && !t;
                fn += !p && t;
            }
            const double denom = 2 * tp + fp + fn;
            result.fold_f1[g][static_cast<std::size_t>(f)] = denom > 0 ? 2 * tp / denom : 0.0;
        }
        double sum = 0.0;
        for (double v : result.fold_f1[g]) sum += v;
        result.mean_f1[g] = sum / folds;
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t g; (g = next.fetch_add(1)) < grid.size();) evaluate_config(g);
    };
    {
        const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(grid.size())));
        std::vector<std::jthread> pool;
        for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
        worker();
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double diff = result.mean_f1[g] - result.mean_f1[best];
        if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && grid[g].cost < grid[best].cost)) best = g;
    }
    result.best_index = best;
    result.best = grid[best];
    return result;
}

OneVsRestSvm train_one_vs_rest(const FeatureMatrix& m, const Labels& labels, const SvmConfig& config)
{
    OneVsRestSvm out;
    for (Index i = 0; i < labels.size(); ++i) {
        if (std::find(out.classes.begin(), out.classes.end(), labels(i)) == out.classes.end()) {
            out.classes.push_back(labels(i));
        }
    }
    std::sort(out.classes.begin(), out.classes.end());
    if (out.classes.size() < 2) throw Error(ErrorCode::degenerate_labels, "need at least two classes");
    for (int c : out.classes) {
        Labels binary = (labels.array() == c).select(Labels::Ones(labels.size()), -Labels::Ones(labels.size()));
        out.models.push_back(train_svm(m, binary, config));
    }
    return out;
}

Labels predict_one_vs_rest(const OneVsRestSvm& model, const FeatureMatrix& m)
{
    Labels out(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        std::size_t best = 0;
        double best_margin = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < model.models.size(); ++k) {
            const double v = margin(model.models[k], m.values.row(i));
            if (v > best_margin) { best_margin = v; best = k; }
        }
        out(i) = model.classes[best];
    }
    return out;
}

nlohmann::json to_json(const KernelSpec& k)
{
    nlohmann::json j = {{"kind", to_string(k.kind)}, {"degree", k.degree}, {"coef0", k.coef0}};
    j["gamma"] = k.gamma ? nlohmann::json(*k.gamma) : nlohmann::json("auto");
    return j;
}

KernelSpec kernel_from_json(const nlohmann::json& j)
{
    KernelSpec k;
    k.kind = kernel_kind_from_string(j.value("kind", std::string("rbf")));
    if (j.contains("gamma") && j.at("gamma").is_number()) k.gamma = j.at("gamma").get<double>();
    k.degree = j.value("degree", k.degree);
    k.coef0 = j.value("coef0", k.coef0);
    return k;
}

nlohmann::json to_json(const SvmConfig& c)
{
    nlohmann::json j = {{"kernel", to_json(c.kernel)},
                        {"C", c.cost},
                        {"tolerance", c.tolerance},
                        {"max_passes", c.max_passes},
                        {"seed", c.seed}};
    if (c.class_weights) {
        j["class_weights"] = {{"normal", c.class_weights->negative}, {"attack", c.class_weights->positive}};
    } else {
        j["class_weights"] = "balanced";
    }
    return j;
}

SvmConfig svm_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "SVM config must be an object");
    SvmConfig c;
    if (j.contains("kernel")) {
        c.kernel = j.at("kernel").is_string() ? KernelSpec{kernel_kind_from_string(j.at("kernel").get<std::string>()), std::nullopt}
                                               : kernel_from_json(j.at("kernel"));
    }
    if (j.contains("gamma") && j.at("gamma").is_number()) c.kernel.gamma = j.at("gamma").get<double>();
    c.cost = j.value("C", c.cost);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.max_passes = j.value("max_passes", c.max_passes);
    c.seed = j.value("seed", c.seed);
    if (j.contains("class_weights") && j.at("class_weights").is_object()) {
        const auto& w = j.at("class_weights");
        c.class_weights = ClassWeights{w.value("normal", 1.0), w.value("attack", 1.0)};
    }
    if (!(c.cost > 0)) throw Error(ErrorCode::invalid_config, "C must be positive");
    return c;
}

namespace {

nlohmann::json matrix_json(const Matrix& x)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < x.rows(); ++r) {
        rows.push_back(std::vector<double>(x.row(r).data(), x.row(r).data() + x.cols()));
    }
    return rows;
}

Matrix matrix_from(const nlohmann::json& j, Index cols)
{
    Matrix x(static_cast<Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const auto v = j[r].get<std::vector<double>>();
        if (static_cast<Index>(v.size()) != cols) throw Error(ErrorCode::parse_error, "ragged support-vector row");
        x.row(static_cast<Index>(r)) = Eigen::Map<const RowVector>(v.data(), cols);
    }
    return x;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

} // namespace

nlohmann::json to_json(const TrainedSvm& s)
{
    return {{"schema_version", 1},
            {"kind", "svm"},
            {"kernel", to_json(s.kernel)},
            {"C", s.cost},
            {"class_weights", {{"normal", s.weights.negative}, {"attack", s.weights.positive}}},
            {"n_features", s.support_vectors.cols()},
            {"support_vectors", matrix_json(s.support_vectors)},
            {"support_indices", s.support_indices},
            {"alpha", to_std(s.alpha)},
            {"y", to_std(s.y)},
            {"bias", s.bias},
            {"scaler_ref", s.scaler_ref},
            {"convergence", {{"converged", s.converged}, {"iterations", s.iterations}, {"final_gap", s.final_gap}}}};
}

TrainedSvm svm_from_json(const nlohmann::json& j)
{
    if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "svm") {
        throw Error(ErrorCode::parse_error, "not a version-1 svm document");
    }
    TrainedSvm s;
    s.kernel = kernel_from_json(j.at("kernel"));
    s.cost = j.at("C").get<double>();
    s.weights = {j.at("class_weights").at("normal").get<double>(), j.at("class_weights").at("attack").get<double>()};
    s.support_vectors = matrix_from(j.at("support_vectors"), j.at("n_features").get<Index>());
    s.support_indices = j.at("support_indices").get<IndexList>();
    s.alpha = from_std(j.at("alpha").get<std::vector<double>>());
    s.y = from_std(j.at("y").get<std::vector<double>>());
    s.bias = j.at("bias").get<double>();
    s.scaler_ref = j.value("scaler_ref", std::string{});
    const auto& conv = j.at("convergence");
    s.converged = conv.at("converged").get<bool>();
    s.iterations = conv.at("iterations").get<long>();
    s.final_gap = conv.at("final_gap").get<double>();
    return s;
}

nlohmann::json to_json(const OneClassSvm& s)
{
    return {{"schema_version", 1},
            {"kind", "one_class_svm"},
            {"kernel", to_json(s.kernel)},
            {"nu", s.nu},
            {"n_features", s.support_vectors.cols()},
            {"support_vectors", matrix_json(s.support_vectors)},
            {"support_indices", s.support_indices},
            {"alpha", to_std(s.alpha)},
            {"rho", s.rho},
            {"boundary", s.boundary},
            {"convergence", {{"converged", s.converged}, {"iterations", s.iterations}}}};
}

OneClassSvm one_class_from_json(const nlohmann::json& j)
{
    if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "one_class_svm") {
        throw Error(ErrorCode::parse_error, "not a version-1 one_class_svm document");
    }
    OneClassSvm s;
    s.kernel = kernel_from_json(j.at("kernel"));
    s.nu = j.at("nu").get<double>();
    s.support_vectors = matrix_from(j.at("support_vectors"), j.at("n_features").get<Index>());
    s.support_indices = j.at("support_indices").get<IndexList>();
    s.alpha = from_std(j.at("alpha").get<std::vector<double>>());
    s.rho = j.at("rho").get<double>();
    s.boundary = j.at("boundary").get<double>();
    s.converged = j.at("convergence").at("converged").get<bool>();
    s.iterations = j.at("convergence").at("iterations").get<long>();
    return s;
}

} // namespace otids
