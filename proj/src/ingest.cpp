#include <otids/ingest.hpp>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace otids {
namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view unquote(std::string_view s)
{
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

/// Splits on commas outside single/double quotes; tokens are trimmed and unquoted.
std::vector<std::string> split_fields(std::string_view line)
{
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    for (char c : line) {
        if (quote) {
            if (c == quote) quote = 0;
            else cur.push_back(c);
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == ',') {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.emplace_back(trim(cur));
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::optional<double> parse_number(std::string_view tok)
{
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) return std::nullopt;
    return v;
}

/// How one source column maps onto the schema.
struct ColumnBinding
{
    std::size_t schema_column;
    std::vector<std::string> nominal_values; // empty unless the source declared nominal
};

enum class MissingStyle { arff, csv };

bool is_missing(std::string_view tok, MissingStyle style)
{
    if (tok == "?") return true;
    if (style == MissingStyle::csv) return tok.empty() || lower(tok) == "nan";
    return false;
}

std::optional<double> decode_value(const std::string& tok, const ColumnBinding& b)
{
    if (!b.nominal_values.empty()) {
        auto it = std::find(b.nominal_values.begin(), b.nominal_values.end(), tok);
        if (it == b.nominal_values.end()) return std::nullopt;
        return static_cast<double>(it - b.nominal_values.begin());
    }
    return parse_number(tok);
}

std::optional<int> decode_label(const std::string& tok, const ColumnBinding& b)
{
    if (auto v = parse_number(tok); v && std::isfinite(*v) && *v == std::round(*v)) {
        return static_cast<int>(*v);
    }
    if (!b.nominal_values.empty()) {
        auto it = std::find(b.nominal_values.begin(), b.nominal_values.end(), tok);
        if (it != b.nominal_values.end()) return static_cast<int>(it - b.nominal_values.begin());
    }
    return std::nullopt;
}

/// Verifies that every source column is known and every value column is
/// covered; label columns may be absent.
void check_coverage(const DatasetSchema& schema, const std::vector<std::string>& source_names,
                    std::vector<ColumnBinding>& bindings)
{
    std::vector<std::string> unmatched;
    std::vector<bool> covered(schema.columns().size(), false);
    for (std::size_t i = 0; i < source_names.size(); ++i) {
        auto col = schema.find(source_names[i]);
        if (!col || covered[*col]) {
            unmatched.push_back(source_names[i]);
            continue;
        }
        covered[*col] = true;
        bindings[i].schema_column = *col;
    }
    for (auto vc : schema.value_columns()) {
        if (!covered[vc]) unmatched.push_back(schema.column(vc).name + " (absent)");
    }
    if (!unmatched.empty()) {
        std::string msg = "unmatched columns for schema '" + schema.id() + "':";
        for (const auto& n : unmatched) msg += " [" + n + "]";
        throw Error(ErrorCode::schema_mismatch, msg);
    }
}

class DatasetBuilder
{
    const DatasetSchema& schema_;
    const std::vector<ColumnBinding>& bindings_;
    std::vector<std::size_t> value_pos_; // schema column -> value position or npos
    MissingStyle style_;
    IngestResult result_;

public:
    DatasetBuilder(const DatasetSchema& schema, const std::vector<ColumnBinding>& bindings,
                   MissingStyle style)
        : schema_(schema), bindings_(bindings),
          value_pos_(schema.columns().size(), static_cast<std::size_t>(-1)), style_(style),
          result_{Dataset{schema, {}}, {}}
    {
        const auto vcs = schema.value_columns();
        for (std::size_t p = 0; p < vcs.size(); ++p) value_pos_[vcs[p]] = p;
        for (auto vc : vcs) result_.report.per_column_missing[schema.column(vc).name] = 0;
    }

    void reject(std::size_t line, const std::string& why)
    {
        ++result_.report.rows_rejected;
        result_.report.rejection_log.push_back("line " + std::to_string(line) + ": " + why);
    }

    void add_row(const std::vector<std::string>& tokens, std::size_t line)
    {
        if (tokens.size() != bindings_.size()) {
            reject(line, "expected " + std::to_string(bindings_.size()) + " fields, got " +
                             std::to_string(tokens.size()));
            return;
        }
        PacketRecord rec;
        rec.values.assign(schema_.value_count(), std::nullopt);
        std::size_t missing = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto& b = bindings_[i];
            const auto& col = schema_.column(b.schema_column);
            const auto& tok = tokens[i];
            if (is_label(col.kind)) {
                if (is_missing(tok, style_)) continue;
                auto v = decode_label(tok, b);
                if (!v) {
                    reject(line, "bad label '" + tok + "' in column '" + col.name + "'");
                    return;
                }
                if (col.kind == ColumnKind::binary_label) rec.binary_label = v;
                else if (col.kind == ColumnKind::category_label) rec.category_label = v;
                else rec.specific_label = v;
                continue;
            }
            if (is_missing(tok, style_)) {
                ++missing;
                continue;
            }
            auto v = decode_value(tok, b);
            if (!v) {
                reject(line, "non-numeric '" + tok + "' in column '" + col.name + "'");
                return;
            }
            rec.values[value_pos_[b.schema_column]] = *v;
        }
        if (auto ts = schema_.timestamp_value_position()) {
            rec.timestamp = rec.values[*ts];
        } else {
            rec.timestamp = static_cast<double>(result_.dataset.records.size());
        }
        for (std::size_t p = 0; p < rec.values.size(); ++p) {
            if (!rec.values[p]) ++result_.report.per_column_missing[schema_.column(schema_.value_columns()[p]).name];
        }
        result_.report.missing_cells += missing;
        result_.dataset.records.push_back(std::move(rec));
    }

    IngestResult finish()
    {
        auto& r = result_.report;
        r.rows_read = result_.dataset.records.size();
        const double cells = static_cast<double>(r.rows_read) * static_cast<double>(schema_.value_count());
        r.missing_fraction = cells > 0 ? static_cast<double>(r.missing_cells) / cells : 0.0;
        return std::move(result_);
    }
};

ArffAttribute parse_attribute(std::string_view rest, std::size_t line)
{
    rest = trim(rest);
    ArffAttribute attr;
    std::string_view type_part;
    if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
        auto close = rest.find(rest.front(), 1);
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::parse_error, "unterminated attribute name on line " + std::to_string(line));
        }
        attr.name = std::string(rest.substr(1, close - 1));
        type_part = trim(rest.substr(close + 1));
    } else {
        auto sp = rest.find_first_of(" \t");
        if (sp == std::string_view::npos) {
            throw Error(ErrorCode::parse_error, "attribute without type on line " + std::to_string(line));
        }
        attr.name = std::string(rest.substr(0, sp));
        type_part = trim(rest.substr(sp));
    }
    if (type_part.empty()) {
        throw Error(ErrorCode::parse_error, "attribute without type on line " + std::to_string(line));
    }
    if (type_part.front() == '{') {
        auto close = type_part.find('}');
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::parse_error, "unterminated nominal set on line " + std::to_string(line));
        }
        attr.type = "nominal";
        attr.nominal_values = split_fields(type_part.substr(1, close - 1));
        return attr;
    }
    attr.type = lower(type_part);
    if (attr.type != "numeric" && attr.type != "real" && attr.type != "integer") {
        throw Error(ErrorCode::parse_error,
                    "unsupported attribute type '" + std::string(type_part) + "' on line " + std::to_string(line));
    }
    return attr;
}

std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"'") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c != '"') out.push_back(c);
    }
    return out + "\"";
}

} // namespace

ArffDocument parse_arff_document(std::string_view text)
{
    ArffDocument doc;
    bool in_data = false;
    bool saw_relation = false;
    const auto lines = split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        auto line = trim(lines[ln]);
        if (line.empty() || line.front() == '%') continue;
        if (!in_data) {
            if (line.front() != '@') {
                throw Error(ErrorCode::parse_error, "unexpected header line " + std::to_string(ln + 1));
            }
            auto sp = line.find_first_of(" \t");
            auto keyword = lower(line.substr(1, sp == std::string_view::npos ? line.size() - 1 : sp - 1));
            auto rest = sp == std::string_view::npos ? std::string_view{} : line.substr(sp);
            if (keyword == "relation") {
                doc.relation_name = std::string(unquote(trim(rest)));
                saw_relation = true;
            } else if (keyword == "attribute") {
                doc.attributes.push_back(parse_attribute(rest, ln + 1));
            } else if (keyword == "data") {
                in_data = true;
            } else {
                throw Error(ErrorCode::parse_error, "unknown keyword @" + keyword + " on line " + std::to_string(ln + 1));
            }
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != doc.attributes.size()) {
            doc.rejected_lines.push_back(ln + 1);
            continue;
        }
        doc.data_rows.push_back(std::move(fields));
    }
    if (!saw_relation || doc.attributes.empty() || !in_data) {
        throw Error(ErrorCode::parse_error, "truncated ARFF header (need @relation, @attribute, @data)");
    }
    return doc;
}

IngestResult parse_arff(std::string_view text, const DatasetSchema& schema)
{
    // Second pass over lines keeps source line numbers for the rejection log.
    auto doc = parse_arff_document(text);
    std::vector<std::string> names;
    std::vector<ColumnBinding> bindings(doc.attributes.size());
    for (std::size_t i = 0; i < doc.attributes.size(); ++i) {
        names.push_back(doc.attributes[i].name);
        bindings[i].nominal_values = doc.attributes[i].nominal_values;
    }
    check_coverage(schema, names, bindings);

    DatasetBuilder builder(schema, bindings, MissingStyle::arff);
    std::size_t next_rejected = 0;
    std::size_t row = 0;
    bool in_data = false;
    const auto lines = split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        auto line = trim(lines[ln]);
        if (line.empty() || line.front() == '%') continue;
        if (!in_data) {
            if (lower(line.substr(0, 5)) == "@data") in_data = true;
            continue;
        }
        if (next_rejected < doc.rejected_lines.size() && doc.rejected_lines[next_rejected] == ln + 1) {
            ++next_rejected;
            builder.reject(ln + 1, "expected " + std::to_string(doc.attributes.size()) + " fields, got " +
                                       std::to_string(split_fields(line).size()));
            continue;
        }
        builder.add_row(doc.data_rows[row++], ln + 1);
    }
    return builder.finish();
}

IngestResult parse_csv(std::string_view text, const DatasetSchema& schema, bool header)
{
    const auto lines = split_lines(text);
    std::size_t ln = 0;
    auto next_nonblank = [&]() -> std::optional<std::string_view> {
        while (ln < lines.size()) {
            auto l = lines[ln++];
            if (!trim(l).empty()) return l;
        }
        return std::nullopt;
    };

    std::vector<ColumnBinding> bindings;
    if (header) {
        auto first = next_nonblank();
        if (!first) throw Error(ErrorCode::parse_error, "CSV has no header row");
        auto names = split_fields(*first);
        bindings.resize(names.size());
        check_coverage(schema, names, bindings);
    }

    std::optional<DatasetBuilder> builder;
    if (header) builder.emplace(schema, bindings, MissingStyle::csv);
    while (auto line = next_nonblank()) {
        auto fields = split_fields(*line);
        if (!builder) {
            // Headerless: schema order, either all columns or value columns only.
            if (fields.size() == schema.columns().size()) {
                for (std::size_t c = 0; c < schema.columns().size(); ++c) bindings.push_back({c, {}});
            } else {
                for (auto vc : schema.value_columns()) bindings.push_back({vc, {}});
            }
            builder.emplace(schema, bindings, MissingStyle::csv);
        }
        builder->add_row(fields, ln);
    }
    if (!builder) {
        for (auto vc : schema.value_columns()) bindings.push_back({vc, {}});
        builder.emplace(schema, bindings, MissingStyle::csv);
    }
    return builder->finish();
}

std::size_t write_canonical(const Dataset& d, std::ostream& out)
{
    const auto text = to_canonical_csv(d);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::io_error, "failed writing canonical CSV");
    return text.size();
}

std::string to_canonical_csv(const Dataset& d)
{
    const auto& schema = d.schema;
    std::string out;
    const auto cols = schema.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out.push_back(',');
        out += csv_escape(cols[c].name);
    }
    out.push_back('\n');
    std::vector<std::size_t> value_pos(cols.size(), static_cast<std::size_t>(-1));
    for (std::size_t p = 0; p < schema.value_count(); ++p) value_pos[schema.value_columns()[p]] = p;

    auto put_label = [&](const std::optional<int>& l) {
        out += l ? std::to_string(*l) : std::string("?");
    };
    for (const auto& r : d.records) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out.push_back(',');
            switch (cols[c].kind) {
                case ColumnKind::binary_label: put_label(r.binary_label); break;
                case ColumnKind::category_label: put_label(r.category_label); break;
                case ColumnKind::specific_label: put_label(r.specific_label); break;
                default: {
                    const auto& v = r.values.at(value_pos[c]);
                    out += v ? format_number(*v) : std::string("?");
                }
            }
        }
        out.push_back('\n');
    }
    return out;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

IngestResult load_dataset(const std::string& path, const DatasetSchema& schema)
{
    const auto text = read_file(path);
    const auto dot = path.rfind('.');
    if (dot != std::string::npos && lower(path.substr(dot)) == ".arff") return parse_arff(text, schema);
    return parse_csv(text, schema, true);
}

} // namespace otids
