#pragma once
#include <otids/evaluate.hpp>
#include <otids/ingest.hpp>
#include <json.hpp>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace otids {

enum class Target { binary, category };

/// Fully resolved experiment description. Stage order is fixed:
/// interpolate -> split -> fit preprocessing on train -> train -> evaluate.
struct PipelineConfig
{
    std::string dataset_path;
    std::string schema_id = "ds1-modbus";

    bool interpolate = true;
    std::optional<bool> scale; ///< unset: on for SVM-based models, off for rf
    std::optional<Index> pca_k;
    std::optional<double> pca_threshold;

    ModelKind model = ModelKind::rf;
    Target target = Target::binary;

    int n_trees = 100;
    int max_depth = 0;
    int min_samples_leaf = 1;
    int features_per_split = 0;

    std::string kernel = "rbf";
    std::optional<double> gamma;
    double cost = 1.0;
    std::optional<double> weight_normal;
    std::optional<double> weight_attack;
    double tolerance = 1e-3;
    int max_passes = 100;
    double nu = 0.1;
    std::size_t top_k = 9;

    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    int threads = 1;

    std::string model_out;
    std::string report_out;
};

/// Throws invalid_config for contradictory settings (e.g. both PCA modes).
void check_config(const PipelineConfig& c);

/// Derived per-stage model settings; all stage seeds come from c.seed.
ModelSettings model_settings(const PipelineConfig& c);

/// The config as echoed into reports (`include_runtime` adds threads and
/// output paths, which do not affect results).
nlohmann::json to_json(const PipelineConfig& c, bool include_runtime = true);

struct PreparedData
{
    Dataset dataset;
    IngestReport ingest;
    FeatureMatrix matrix;
    Labels labels;          ///< binary {0,1}
    Labels categories;      ///< present when the schema has category labels
    SplitIndices split;
};

/// ingest -> (interpolate) -> feature matrix -> stratified split.
PreparedData prepare_data(const PipelineConfig& c);

struct TrainOutcome
{
    EvaluationReport report;
    nlohmann::json model;
};

TrainOutcome run_train(const PipelineConfig& c);

struct ImportanceRow
{
    std::string feature;
    double score;
};

enum class ImportanceMethod { gini, permutation };

std::vector<ImportanceRow> run_importance(const PipelineConfig& c, ImportanceMethod method, int repeats = 5);

/// Exit codes: 0 ok, 2 I/O or parse, 3 schema, 4 config, 5 degenerate data.
int exit_code_for(ErrorCode code);

int cmd_ingest(const std::string& path, const std::string& schema_id, const std::string& emit_path,
               std::ostream& out, std::ostream& err);
int cmd_train(const PipelineConfig& c, std::ostream& out, std::ostream& err);
int cmd_importance(const PipelineConfig& c, ImportanceMethod method, int repeats, bool json,
                   std::ostream& out, std::ostream& err);
/// Grid file: JSON array of SVM config objects.
int cmd_gridsearch(const PipelineConfig& c, const std::string& grid_path, int folds,
                   std::ostream& out, std::ostream& err);

} // namespace otids
