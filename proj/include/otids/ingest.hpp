#pragma once
#include <otids/data_model.hpp>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace otids {

struct ArffAttribute
{
    std::string name;
    /// "numeric"/"real"/"integer", or the nominal values for `{a,b,...}`.
    std::string type;
    std::vector<std::string> nominal_values;

    bool is_nominal() const noexcept { return type == "nominal"; }
};

struct ArffDocument
{
    std::string relation_name;
    std::vector<ArffAttribute> attributes;
    /// Each row holds exactly one token per attribute; rows of the wrong
    /// arity are dropped and counted.
    std::vector<std::vector<std::string>> data_rows;
    std::vector<std::size_t> rejected_lines;
};

/// Parses the dense ARFF subset: @relation, @attribute (numeric, real,
/// integer, nominal), @data, `%` comments, quoted names, `?` missing.
ArffDocument parse_arff_document(std::string_view text);

struct IngestReport
{
    std::size_t rows_read = 0; ///< rows accepted into the dataset
    std::size_t rows_rejected = 0;
    std::size_t missing_cells = 0;
    double missing_fraction = 0.0; ///< missing_cells / (rows_read * value columns)
    std::map<std::string, std::size_t> per_column_missing;
    std::vector<std::string> rejection_log;
};

struct IngestResult
{
    Dataset dataset;
    IngestReport report;
};

IngestResult parse_arff(std::string_view text, const DatasetSchema& schema);

/// Comma-separated values. Missing markers: empty cell, `NaN`, `?`
/// (case-insensitive). Without a header, columns follow schema order and
/// the row must hold either every schema column or only the value columns.
IngestResult parse_csv(std::string_view text, const DatasetSchema& schema, bool header = true);

/// Canonical CSV: header of schema names, schema order, `?` for missing,
/// `\n` line endings, shortest round-trip number formatting.
std::size_t write_canonical(const Dataset& d, std::ostream& out);
std::string to_canonical_csv(const Dataset& d);

/// Reads a whole file; throws io_error.
std::string read_file(const std::string& path);

/// Picks the parser from the file extension (.arff, otherwise CSV).
IngestResult load_dataset(const std::string& path, const DatasetSchema& schema);

} // namespace otids
