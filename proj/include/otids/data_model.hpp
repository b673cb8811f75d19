#pragma once
#include <otids/types.hpp>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace otids {

enum class ColumnKind
{
    numeric,
    categorical,
    binary_label,
    category_label,
    specific_label,
    timestamp,
};

std::string_view to_string(ColumnKind kind);

constexpr bool is_label(ColumnKind kind) noexcept
{
    return kind == ColumnKind::binary_label || kind == ColumnKind::category_label ||
           kind == ColumnKind::specific_label;
}

/// A model input column: a value column that is not the time ordinate.
constexpr bool is_model_feature(ColumnKind kind) noexcept
{
    return kind == ColumnKind::numeric || kind == ColumnKind::categorical;
}

struct FeatureColumn
{
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    /// Ordered category names; present iff kind is categorical.
    std::optional<std::vector<std::string>> categories;
    /// Alternative spellings accepted by the parsers (e.g. the column names
    /// used by the public dataset distributions).
    std::vector<std::string> aliases;

    bool operator==(const FeatureColumn&) const = default;
};

/// Ordered column roster. Column order is canonical for every downstream
/// matrix. The constructor enforces name uniqueness and the label-count rules.
class DatasetSchema
{
    std::string id_;
    std::vector<FeatureColumn> columns_;
    std::vector<std::size_t> value_columns_;
    std::vector<std::size_t> model_columns_;
    std::optional<std::size_t> timestamp_column_;
    std::optional<std::size_t> binary_label_;
    std::optional<std::size_t> category_label_;
    std::optional<std::size_t> specific_label_;

public:
    DatasetSchema(std::string id, std::vector<FeatureColumn> columns);

    const std::string& id() const noexcept { return id_; }
    std::span<const FeatureColumn> columns() const noexcept { return columns_; }
    const FeatureColumn& column(std::size_t i) const { return columns_.at(i); }

    /// Schema indices of non-label columns, in order. PacketRecord::values
    /// is aligned with this list.
    std::span<const std::size_t> value_columns() const noexcept { return value_columns_; }
    std::size_t value_count() const noexcept { return value_columns_.size(); }

    /// Positions within PacketRecord::values of numeric/categorical columns.
    std::span<const std::size_t> model_value_positions() const noexcept { return model_columns_; }
    std::vector<std::string> model_feature_names() const;

    std::optional<std::size_t> timestamp_column() const noexcept { return timestamp_column_; }
    /// Position of the timestamp column within PacketRecord::values.
    std::optional<std::size_t> timestamp_value_position() const;

    std::optional<std::size_t> binary_label_column() const noexcept { return binary_label_; }
    std::optional<std::size_t> category_label_column() const noexcept { return category_label_; }
    std::optional<std::size_t> specific_label_column() const noexcept { return specific_label_; }

    /// Case-insensitive, whitespace-normalised lookup over names and aliases.
    std::optional<std::size_t> find(std::string_view name) const;

    bool operator==(const DatasetSchema& o) const
    {
        return id_ == o.id_ && columns_ == o.columns_;
    }
};

/// Lowercases and collapses runs of whitespace/underscores into one space.
std::string normalize_name(std::string_view name);

struct PacketRecord
{
    std::vector<std::optional<double>> values;
    std::optional<int> binary_label;
    std::optional<int> category_label;
    std::optional<int> specific_label;
    std::optional<double> timestamp;

    bool operator==(const PacketRecord&) const = default;
};

struct AttackCategory
{
    int label;
    std::string_view abbreviation;
    std::string_view description;
};

/// The eight Modbus attack categories, indexed by label.
std::span<const AttackCategory> attack_categories() noexcept;

struct Dataset
{
    DatasetSchema schema;
    std::vector<PacketRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    bool operator==(const Dataset&) const = default;
};

/// Known ids: "ds1-modbus", "ds2-opcua".
DatasetSchema builtin_schema(std::string_view id);

struct ClassBalance
{
    std::size_t total = 0;
    std::size_t attacks = 0;
    double attack_fraction = 0.0;
    double normal_fraction = 0.0;
    /// Keyed by attack-category label; only records carrying a category label.
    std::map<int, std::size_t> per_category;
};

ClassBalance class_balance(const Dataset& d);

struct Violation
{
    std::size_t record;
    std::string column;
    std::string rule;
};

std::vector<Violation> validate(const Dataset& d);

/// Binary labels as {0,1}; throws missing_labels if any record is unlabeled.
Labels binary_labels(const Dataset& d);

/// Category labels 0..7; throws missing_labels if any record lacks one.
Labels category_labels(const Dataset& d);

} // namespace otids
