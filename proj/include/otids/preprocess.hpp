#pragma once
#include <otids/data_model.hpp>
#include <otids/types.hpp>
#include <json.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace otids {

/// Dense, row-major feature block with a per-cell missing mask.
struct FeatureMatrix
{
    Matrix values;
    MaskMatrix missing;
    std::vector<std::string> column_names;

    Index rows() const noexcept { return values.rows(); }
    Index cols() const noexcept { return values.cols(); }
    bool complete() const { return !missing.any(); }

    FeatureMatrix select_rows(const IndexList& rows) const;
    FeatureMatrix select_cols(const std::vector<Index>& cols) const;
};

FeatureMatrix make_feature_matrix(Matrix values, std::vector<std::string> names = {});

/// Model-feature columns (numeric + categorical, schema order). Missing
/// cells hold NaN and are flagged in the mask.
FeatureMatrix to_feature_matrix(const Dataset& d);

/// Fills every missing value cell by linear interpolation along the time
/// ordinate (the timestamp column, else the record ordinal); edge gaps take
/// the nearest observation. Observed cells are never modified.
Dataset interpolate_time(const Dataset& d);

/// Interpolation of one series over abscissa `t` (non-decreasing).
std::vector<double> interpolate_series(std::span<const double> t,
                                       std::span<const std::optional<double>> values,
                                       const std::string& column_name = "series");

struct SplitIndices
{
    IndexList train;
    IndexList test;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;

    bool operator==(const SplitIndices&) const = default;
};

/// Per-class seeded shuffle; the first round-half-up(count * fraction)
/// indices of each class go to train. Both lists are returned sorted.
SplitIndices stratified_split(const Labels& labels, double train_fraction, std::uint64_t seed);
SplitIndices stratified_split(const Dataset& d, double train_fraction, std::uint64_t seed);

/// Stratified k-fold assignment: returns fold id per row.
std::vector<int> stratified_kfold(const Labels& labels, int folds, std::uint64_t seed);

struct ScalerState
{
    Vector mean;
    Vector stddev; ///< population standard deviation; 0 marks a constant column
};

ScalerState fit_scaler(const FeatureMatrix& m, const IndexList& rows);
FeatureMatrix apply_scaler(const ScalerState& s, const FeatureMatrix& m);

/// Either a fixed component count or a cumulative explained-variance target.
struct ComponentCount { Index k; };
struct VarianceThreshold { double fraction; };
using PcaTarget = std::variant<ComponentCount, VarianceThreshold>;

struct PcaState
{
    Vector mean;
    Matrix components;          ///< k x cols, orthonormal rows
    Vector explained_variance;  ///< all eigenvalues, descending
    Index k = 0;

    double explained_fraction(Index upto) const;
};

PcaState fit_pca(const FeatureMatrix& m, const IndexList& rows, PcaTarget target);
FeatureMatrix apply_pca(const PcaState& p, const FeatureMatrix& m);
/// Maps projected rows back to the input space.
Matrix reconstruct_pca(const PcaState& p, const Matrix& projected);

nlohmann::json to_json(const ScalerState& s);
ScalerState scaler_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PcaState& p);
PcaState pca_from_json(const nlohmann::json& j);

IndexList all_rows(Index n);

} // namespace otids
