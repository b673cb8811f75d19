#pragma once
#include <otids/preprocess.hpp>
#include <otids/types.hpp>
#include <json.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace otids {

enum class KernelKind { linear, rbf, polynomial };

std::string_view to_string(KernelKind k);
KernelKind kernel_kind_from_string(std::string_view s);

struct KernelSpec
{
    KernelKind kind = KernelKind::rbf;
    /// Unset means "auto": 1 / (n_features * mean column variance), resolved
    /// at training time and stored resolved in the model.
    std::optional<double> gamma;
    int degree = 3;
    double coef0 = 0.0;

    bool operator==(const KernelSpec&) const = default;
};

/// K(x, z) for the three supported kernels. Requires a resolved gamma for
/// rbf/polynomial.
template <class DerivedX, class DerivedZ>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& x,
                   const Eigen::MatrixBase<DerivedZ>& z)
{
    if (x.size() != z.size()) {
        throw Error(ErrorCode::shape_mismatch, "kernel arguments differ in dimension");
    }
    const auto xv = x.reshaped();
    const auto zv = z.reshaped();
    switch (spec.kind) {
        case KernelKind::linear:
            return xv.dot(zv);
        case KernelKind::rbf:
            return std::exp(-spec.gamma.value() * (xv - zv).squaredNorm());
        case KernelKind::polynomial:
            return std::pow(spec.gamma.value() * xv.dot(zv) + spec.coef0, spec.degree);
    }
    return 0.0;
}

/// Per-class penalty multipliers; C_i = C * weight(y_i).
struct ClassWeights
{
    double negative = 1.0;
    double positive = 1.0;

    bool operator==(const ClassWeights&) const = default;
};

struct SvmConfig
{
    KernelSpec kernel;
    double cost = 1.0;
    /// Unset means inverse class frequency, n / (2 n_class).
    std::optional<ClassWeights> class_weights;
    double tolerance = 1e-3;
    /// One pass = n pair updates; training stops after max_passes * n updates.
    int max_passes = 100;
    std::uint64_t seed = 0;
    /// Records the dual objective after every update (diagnostics only).
    bool track_objective = false;
    /// Kernel row cache budget.
    std::size_t cache_megabytes = 256;

    bool operator==(const SvmConfig&) const = default;
};

struct TrainedSvm
{
    KernelSpec kernel;            ///< gamma resolved
    Matrix support_vectors;       ///< rows with alpha > 0
    Vector alpha;
    Vector y;                     ///< +-1 per support vector
    IndexList support_indices;    ///< training-row index of each support vector
    double bias = 0.0;
    double cost = 1.0;
    ClassWeights weights;         ///< resolved
    bool converged = false;
    long iterations = 0;
    double final_gap = 0.0;
    std::vector<double> objective_history; ///< dual objective (maximisation form)
    std::string scaler_ref;
};

/// labels take values -1 / +1.
TrainedSvm train_svm(const FeatureMatrix& m, const Labels& labels, const SvmConfig& config);

/// Sum_i alpha_i y_i K(x_i, x) - b.
double margin(const TrainedSvm& svm, const Eigen::Ref<const RowVector>& x);
/// sign(margin), with a zero margin mapped to +1.
int decide(const TrainedSvm& svm, const Eigen::Ref<const RowVector>& x);
Labels decide(const TrainedSvm& svm, const FeatureMatrix& m);

/// Per training row: how far the KKT condition is violated under the stored
/// bias (0 when satisfied). `m`/`labels` must be the training data.
Vector kkt_residuals(const TrainedSvm& svm, const FeatureMatrix& m, const Labels& labels);

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double dual_objective(const TrainedSvm& svm);

/// gamma = 1 / (n_features * mean column variance); 1/n_features when the
/// variance vanishes.
double auto_gamma(const Matrix& x);

ClassWeights balanced_weights(const Labels& labels);

struct OneClassConfig
{
    KernelSpec kernel;
    double nu = 0.1;
    double tolerance = 1e-3;
    int max_passes = 100;
    std::uint64_t seed = 0;
    std::size_t cache_megabytes = 256;
};

/// nu-one-class model: alpha sums to 1 with 0 <= alpha_i <= 1/(nu n).
struct OneClassSvm
{
    KernelSpec kernel;
    Matrix support_vectors;
    Vector alpha;
    IndexList support_indices;
    double rho = 0.0;
    /// Solver optimality band on the score scale; free support vectors lie
    /// within it of zero.
    double boundary = 0.0;
    double nu = 0.1;
    bool converged = false;
    long iterations = 0;
};

OneClassSvm train_one_class(const FeatureMatrix& m, const OneClassConfig& config);
/// Sum_i alpha_i K(x_i, x) - rho.
double one_class_score(const OneClassSvm& model, const Eigen::Ref<const RowVector>& x);
/// +1 inlier, -1 outlier: the score falls below -boundary.
int one_class_decide(const OneClassSvm& model, const Eigen::Ref<const RowVector>& x);
Labels one_class_decide(const OneClassSvm& model, const FeatureMatrix& m);

struct GridSearchResult
{
    std::size_t best_index = 0;
    SvmConfig best;
    std::vector<double> mean_f1;
    std::vector<std::vector<double>> fold_f1;
};

/// Stratified k-fold CV; picks the highest mean F1 (positive class +1),
/// ties broken by lower C, then earlier grid position.
GridSearchResult grid_search(const FeatureMatrix& m, const Labels& labels, const std::vector<SvmConfig>& grid,
                             int folds, std::uint64_t seed, int threads = 1);

/// One-vs-rest over the binary trainer for multi-category targets.
struct OneVsRestSvm
{
    std::vector<int> classes;
    std::vector<TrainedSvm> models;
};

OneVsRestSvm train_one_vs_rest(const FeatureMatrix& m, const Labels& labels, const SvmConfig& config);
Labels predict_one_vs_rest(const OneVsRestSvm& model, const FeatureMatrix& m);

nlohmann::json to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SvmConfig& c);
SvmConfig svm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainedSvm& s);
TrainedSvm svm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OneClassSvm& s);
OneClassSvm one_class_from_json(const nlohmann::json& j);

} // namespace otids
