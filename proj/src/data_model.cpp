#include <otids/data_model.hpp>
#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace otids {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::unknown_schema: return "UnknownSchema";
        case ErrorCode::missing_labels: return "MissingLabels";
        case ErrorCode::schema_mismatch: return "SchemaMismatch";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::empty_column: return "EmptyColumn";
        case ErrorCode::stratum_too_small: return "StratumTooSmall";
        case ErrorCode::not_interpolated: return "NotInterpolated";
        case ErrorCode::invalid_component_count: return "InvalidComponentCount";
        case ErrorCode::invalid_config: return "InvalidConfig";
        case ErrorCode::empty_node: return "EmptyNode";
        case ErrorCode::degenerate_labels: return "DegenerateLabels";
        case ErrorCode::shape_mismatch: return "ShapeMismatch";
        case ErrorCode::not_finite: return "NotFinite";
        case ErrorCode::empty_input: return "EmptyInput";
        case ErrorCode::length_mismatch: return "LengthMismatch";
        case ErrorCode::empty_evaluation: return "EmptyEvaluation";
    }
    return "Error";
}

std::string_view to_string(ColumnKind kind)
{
    switch (kind) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::binary_label: return "binary_label";
        case ColumnKind::category_label: return "category_label";
        case ColumnKind::specific_label: return "specific_label";
        case ColumnKind::timestamp: return "timestamp";
    }
    return "unknown";
}

std::string normalize_name(std::string_view name)
{
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char c : name) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc) || c == '_') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

DatasetSchema::DatasetSchema(std::string id, std::vector<FeatureColumn> columns)
    : id_(std::move(id)), columns_(std::move(columns))
{
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto& c = columns_[i];
        if (!seen.insert(normalize_name(c.name)).second) {
            throw Error(ErrorCode::invalid_config, "duplicate column name '" + c.name + "'");
        }
        if (c.categories.has_value() != (c.kind == ColumnKind::categorical)) {
            throw Error(ErrorCode::invalid_config,
                        "column '" + c.name + "': categories present iff kind is categorical");
        }
        auto claim = [&](std::optional<std::size_t>& slot) {
            if (slot) {
                throw Error(ErrorCode::invalid_config,
                            "schema '" + id_ + "' has more than one " +
                                std::string(to_string(c.kind)) + " column");
            }
            slot = i;
        };
        switch (c.kind) {
            case ColumnKind::binary_label: claim(binary_label_); break;
            case ColumnKind::category_label: claim(category_label_); break;
            case ColumnKind::specific_label: claim(specific_label_); break;
            case ColumnKind::timestamp:
                claim(timestamp_column_);
                value_columns_.push_back(i);
                break;
            default:
                model_columns_.push_back(value_columns_.size());
                value_columns_.push_back(i);
        }
    }
    if ((category_label_ || specific_label_) && !binary_label_) {
        throw Error(ErrorCode::invalid_config,
                    "schema '" + id_ + "' has category labels but no binary label");
    }
}

std::vector<std::string> DatasetSchema::model_feature_names() const
{
    std::vector<std::string> names;
    names.reserve(model_columns_.size());
    for (auto pos : model_columns_) names.push_back(columns_[value_columns_[pos]].name);
    return names;
}

std::optional<std::size_t> DatasetSchema::timestamp_value_position() const
{
    if (!timestamp_column_) return std::nullopt;
    auto it = std::find(value_columns_.begin(), value_columns_.end(), *timestamp_column_);
    return static_cast<std::size_t>(it - value_columns_.begin());
}

std::optional<std::size_t> DatasetSchema::find(std::string_view name) const
{
    const auto key = normalize_name(name);
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (normalize_name(columns_[i].name) == key) return i;
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        for (const auto& alias : columns_[i].aliases) {
            if (normalize_name(alias) == key) return i;
        }
    }
    return std::nullopt;
}

namespace {

constexpr std::array<AttackCategory, 8> kCategories{{
    {0, "Normal", "Normal Behaviour"},
    {1, "NMRI", "Naive Malicious Response Injection"},
    {2, "CMRI", "Complex Malicious Response Injection"},
    {3, "MSCI", "Malicious State Command Injection"},
    {4, "MPCI", "Malicious Parameter Command Injection"},
    {5, "MFCI", "Malicious Function Code Injection"},
    {6, "DoS", "Denial of Service"},
    {7, "Recon", "Reconnaissance"},
}};

FeatureColumn numeric(std::string name, std::vector<std::string> aliases = {})
{
    return {std::move(name), ColumnKind::numeric, std::nullopt, std::move(aliases)};
}

FeatureColumn categorical(std::string name, std::vector<std::string> categories,
                          std::vector<std::string> aliases = {})
{
    return {std::move(name), ColumnKind::categorical, std::move(categories), std::move(aliases)};
}

FeatureColumn of_kind(std::string name, ColumnKind kind, std::vector<std::string> aliases = {})
{
    return {std::move(name), kind, std::nullopt, std::move(aliases)};
}

DatasetSchema ds1_schema()
{
    // Aliases are the attribute names of the public gas-pipeline ARFF file.
    return DatasetSchema("ds1-modbus", {
        numeric("Address", {"address"}),
        categorical("Function Code",
                    {"1", "2", "3", "4", "5", "6", "7", "8", "15", "16", "17", "22", "23"},
                    {"function"}),
        numeric("Length of Packet", {"length"}),
        numeric("Setpoint"),
        numeric("Gain"),
        numeric("Reset Rate"),
        numeric("Deadband"),
        numeric("Cycle Time"),
        numeric("Rate"),
        categorical("System Mode", {"off", "manual", "automatic"}),
        categorical("Control Scheme", {"pump", "solenoid"}),
        categorical("Pump", {"off", "on"}),
        categorical("Solenoid", {"closed", "open"}),
        numeric("Pressure Measurement", {"pressure"}),
        numeric("CRC Rate", {"crc"}),
        categorical("Command Response", {"response", "command"}, {"command"}),
        of_kind("Time", ColumnKind::timestamp),
        of_kind("Binary Attack", ColumnKind::binary_label, {"binary result", "label"}),
        of_kind("Categorised Attack", ColumnKind::category_label,
                {"categorized result", "categorized attack", "categorised result"}),
        of_kind("Specific Attack", ColumnKind::specific_label, {"specific result"}),
    });
}

DatasetSchema ds2_schema()
{
    const std::vector<std::string> binary{"0", "1"};
    return DatasetSchema("ds2-opcua", {
        numeric("Water Temperature"),
        numeric("Water flow volume"),
        numeric("Water level container 1"),
        numeric("Water level Container 2"),
        numeric("Water pressure"),
        categorical("S111", binary),
        categorical("S113", binary),
        categorical("Pump running", binary),
        categorical("Pump status", binary),
        categorical("S112", binary),
        numeric("B114"),
        categorical("Ball valve acknowledge", binary),
        of_kind("Label", ColumnKind::binary_label, {"binary attack", "attack"}),
    });
}

} // namespace

std::span<const AttackCategory> attack_categories() noexcept { return kCategories; }

DatasetSchema builtin_schema(std::string_view id)
{
    if (id == "ds1-modbus") return ds1_schema();
    if (id == "ds2-opcua") return ds2_schema();
    throw Error(ErrorCode::unknown_schema, "no builtin schema named '" + std::string(id) + "'");
}

ClassBalance class_balance(const Dataset& d)
{
    ClassBalance out;
    if (d.records.empty()) throw Error(ErrorCode::missing_labels, "dataset has no records");
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& r = d.records[i];
        if (!r.binary_label) {
            throw Error(ErrorCode::missing_labels, "record " + std::to_string(i) + " has no binary label");
        }
        ++out.total;
        if (*r.binary_label == 1) ++out.attacks;
        if (r.category_label) ++out.per_category[*r.category_label];
    }
    const auto total = static_cast<double>(out.total);
    out.normal_fraction = static_cast<double>(out.total - out.attacks) / total;
    out.attack_fraction = 1.0 - out.normal_fraction;
    return out;
}

std::vector<Violation> validate(const Dataset& d)
{
    std::vector<Violation> out;
    const auto& schema = d.schema;
    auto label_name = [&](std::optional<std::size_t> col, std::string_view fallback) {
        return col ? schema.column(*col).name : std::string(fallback);
    };
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& r = d.records[i];
        if (r.values.size() != schema.value_count()) {
            out.push_back({i, "*", "arity: expected " + std::to_string(schema.value_count()) +
                                       " values, got " + std::to_string(r.values.size())});
        } else {
            for (std::size_t j = 0; j < r.values.size(); ++j) {
                if (r.values[j] && !std::isfinite(*r.values[j])) {
                    out.push_back({i, schema.column(schema.value_columns()[j]).name, "finite"});
                }
            }
        }
        if (r.binary_label && *r.binary_label != 0 && *r.binary_label != 1) {
            out.push_back({i, label_name(schema.binary_label_column(), "binary"),
                           "binary-range: label must be 0 or 1"});
        }
        if (r.category_label && (*r.category_label < 0 || *r.category_label > 7)) {
            out.push_back({i, label_name(schema.category_label_column(), "category"),
                           "category-range: label must be in 0..7"});
        }
        if (r.binary_label && r.category_label &&
            ((*r.category_label == 0) != (*r.binary_label == 0))) {
            out.push_back({i, label_name(schema.category_label_column(), "category"),
                           "label-consistency: category " + std::to_string(*r.category_label) +
                               " with binary " + std::to_string(*r.binary_label)});
        }
    }
    return out;
}

Labels binary_labels(const Dataset& d)
{
    Labels y(static_cast<Index>(d.records.size()));
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& l = d.records[i].binary_label;
        if (!l) throw Error(ErrorCode::missing_labels, "record " + std::to_string(i) + " has no binary label");
        y(static_cast<Index>(i)) = *l;
    }
    return y;
}

Labels category_labels(const Dataset& d)
{
    Labels y(static_cast<Index>(d.records.size()));
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& l = d.records[i].category_label;
        if (!l) throw Error(ErrorCode::missing_labels, "record " + std::to_string(i) + " has no category label");
        y(static_cast<Index>(i)) = *l;
    }
    return y;
}

} // namespace otids
