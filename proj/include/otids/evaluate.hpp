#pragma once
#include <otids/forest.hpp>
#include <otids/preprocess.hpp>
#include <otids/svm.hpp>
#include <json.hpp>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace otids {

/// Attack is the positive class: a label counts as positive iff it equals 1,
/// so both {0,1} and {-1,+1} codings work.
struct ConfusionMatrix
{
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const Labels& predicted, const Labels& truth);

struct Metrics
{
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    /// Set when the metric's denominator was zero and 0 was reported.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

Metrics metrics(const ConfusionMatrix& c);

struct ModelDescriptor
{
    std::string kind;
    nlohmann::json config;
    std::uint64_t seed = 0;
};

struct SplitDescriptor
{
    double fraction = 0.8;
    std::uint64_t seed = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

struct EvaluationReport
{
    std::string dataset_id;
    ModelDescriptor model;
    SplitDescriptor split;
    ConfusionMatrix confusion;
    Metrics metrics;
    double train_seconds = 0;
    double predict_seconds = 0;
    nlohmann::json extra = nlohmann::json::object();
};

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const EvaluationReport& r);
/// Checks a document against the report schema; returns the problems found.
std::vector<std::string> validate_report_json(const nlohmann::json& j);

enum class ModelKind { rf, svm, ocsvm, ensemble };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct PreprocessOptions
{
    bool scale = true;
    std::optional<PcaTarget> pca;
};

/// Shared model settings for benchmark / ensemble runs.
struct ModelSettings
{
    ModelKind kind = ModelKind::rf;
    ForestConfig forest;
    SvmConfig svm;
    OneClassConfig one_class;
    std::size_t top_k = 9;
    PreprocessOptions preprocess;
};

/// Train on split.train, evaluate on split.test, with monotonic timing.
/// `m` must be complete (interpolated); labels are {0,1}. Preprocessing is
/// fitted on the training rows only. `model_json`, when given, receives the
/// serialised model.
EvaluationReport benchmark(const FeatureMatrix& m, const Labels& labels, const SplitIndices& split,
                           const ModelSettings& settings, const std::string& dataset_id,
                           nlohmann::json* model_json = nullptr);

struct EnsembleResult
{
    EvaluationReport report;
    std::vector<Index> selected;             ///< feature columns, importance order
    std::vector<std::string> selected_names;
};

/// Forest ranks features (Gini importance) on the training rows, the SVM is
/// trained on the top_k columns. The report's `extra` records the SVM
/// training time on the full feature set and the delta.
EnsembleResult ensemble_rf_svm(const FeatureMatrix& m, const Labels& labels, const SplitIndices& split,
                               const ModelSettings& settings, const std::string& dataset_id,
                               nlohmann::json* model_json = nullptr);

/// Indices sorted by descending score; ties by lower index.
std::vector<Index> rank_descending(const Vector& scores);

} // namespace otids
