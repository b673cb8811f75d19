#include <doctest.h>
#include <otids/ingest.hpp>
#include <otids/random.hpp>
#include <algorithm>
#include <cmath>
#include <sstream>

using namespace otids;

namespace {

std::string ds1_header(bool with_labels)
{
    const auto s = builtin_schema("ds1-modbus");
    std::string h = "% test file\n@relation gas_pipeline\n";
    for (auto c : s.value_columns()) h += "@attribute '" + s.column(c).name + "' numeric\n";
    if (with_labels) {
        h += "@attribute 'binary result' {0,1}\n";
        h += "@attribute 'categorized result' {0,1,2,3,4,5,6,7}\n";
        h += "@attribute 'specific result' numeric\n";
    }
    return h + "@data\n";
}

std::string row(int n, const std::string& fill = "1")
{
    std::string r;
    for (int i = 0; i < n; ++i) r += (i ? "," : "") + fill;
    return r;
}

Dataset random_dataset(const DatasetSchema& s, Rng& rng)
{
    Dataset d{s, {}};
    const auto n = rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
        PacketRecord r;
        for (std::size_t v = 0; v < s.value_count(); ++v) {
            const auto& col = s.column(s.value_columns()[v]);
            if (col.kind != ColumnKind::timestamp && rng.bernoulli(0.2)) {
                r.values.emplace_back();
            } else if (col.kind == ColumnKind::categorical) {
                r.values.emplace_back(static_cast<double>(rng.below(col.categories->size())));
            } else {
                r.values.emplace_back(rng.normal(0.0, 1e3) * std::pow(10.0, rng.uniform(-8, 8)));
            }
        }
        const int cat = rng.bernoulli(0.5) ? 0 : static_cast<int>(1 + rng.below(7));
        if (s.binary_label_column()) r.binary_label = cat > 0;
        if (s.category_label_column()) r.category_label = cat;
        if (s.specific_label_column()) r.specific_label = cat == 0 ? 0 : (cat - 1) * 5 + 1 + static_cast<int>(rng.below(5));
        if (auto t = s.timestamp_value_position()) {
            r.values[*t] = static_cast<double>(i) + rng.uniform();
            r.timestamp = r.values[*t];
        } else {
            r.timestamp = static_cast<double>(i);
        }
        d.records.push_back(r);
    }
    return d;
}

} // namespace

TEST_CASE("arff document structure")
{
    const auto doc = parse_arff_document(
        "@RELATION r\n@attribute a numeric\n@attribute 'b c' {x,y}\n@data\n1,x\n% note\n2,y\n3\n");
    CHECK(doc.relation_name == "r");
    REQUIRE(doc.attributes.size() == 2);
    CHECK(doc.attributes[1].name == "b c");
    CHECK(doc.attributes[1].is_nominal());
    CHECK(doc.attributes[1].nominal_values == std::vector<std::string>{"x", "y"});
    CHECK(doc.data_rows.size() == 2);
    CHECK(doc.rejected_lines.size() == 1);
}

TEST_CASE("three-row arff with one missing cell")
{
    const auto text = ds1_header(false) + row(17) + "\n" + row(16) + ",?\n" + row(17) + "\n";
    const auto r = parse_arff(text, builtin_schema("ds1-modbus"));
    CHECK(r.report.rows_read == 3);
    CHECK(r.report.missing_cells == 1);
    CHECK(r.report.missing_fraction == doctest::Approx(1.0 / 51.0).epsilon(1e-15));
    CHECK(r.report.per_column_missing.at("Time") == 1);
}

TEST_CASE("short row is rejected and parsing continues")
{
    const auto text = ds1_header(true) + row(20, "0") + "\n" + row(5) + "\n" + row(20, "0") + "\n";
    const auto r = parse_arff(text, builtin_schema("ds1-modbus"));
    CHECK(r.report.rows_rejected == 1);
    CHECK(r.dataset.size() == 2);
    CHECK(r.report.rows_read == 2);
}

TEST_CASE("arff labels map onto the schema")
{
    auto text = ds1_header(true) + row(17) + ",1,4,17\n";
    const auto r = parse_arff(text, builtin_schema("ds1-modbus"));
    REQUIRE(r.dataset.size() == 1);
    CHECK(r.dataset.records[0].binary_label == 1);
    CHECK(r.dataset.records[0].category_label == 4);
    CHECK(r.dataset.records[0].specific_label == 17);
}

TEST_CASE("arff errors")
{
    const auto s = builtin_schema("ds1-modbus");
    try {
        parse_arff("@relation r\n@attribute address numeric\n@attribute bogus numeric\n@data\n1,2\n", s);
        FAIL("expected schema mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema_mismatch);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    try {
        parse_arff("@relation r\n@attribute address numeric\n@attribute", s);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
    }
}

TEST_CASE("csv without missing cells")
{
    const auto s = builtin_schema("ds2-opcua");
    const std::string text = row(12, "0.5") + ",0\n" + row(12, "2") + ",1\n";
    const auto r = parse_csv(text, s, false);
    CHECK(r.dataset.size() == 2);
    CHECK(r.report.missing_fraction == 0.0);
    CHECK(r.dataset.records[1].binary_label == 1);
}

TEST_CASE("csv NaN cell is missing and the record is kept")
{
    const auto s = builtin_schema("ds2-opcua");
    const std::string text = row(11, "1") + ",NaN,0\n" + row(11, "1") + ",,0\n";
    const auto r = parse_csv(text, s, false);
    CHECK(r.dataset.size() == 2);
    CHECK(r.report.missing_cells == 2);
    CHECK_FALSE(r.dataset.records[0].values[11].has_value());
}

TEST_CASE("canonical writer")
{
    const auto s = builtin_schema("ds2-opcua");
    std::ostringstream empty;
    const auto bytes = write_canonical(Dataset{s, {}}, empty);
    const auto header = empty.str();
    CHECK(bytes == header.size());
    CHECK(std::count(header.begin(), header.end(), '\n') == 1);

    auto r = parse_csv(row(11, "1") + ",?,0\n", s, false);
    const auto text = to_canonical_csv(r.dataset);
    CHECK(std::count(text.begin(), text.end(), '?') == 1);
}

TEST_CASE("round trip over random datasets")
{
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        Rng rng(seed);
        const auto s = builtin_schema(seed % 2 ? "ds1-modbus" : "ds2-opcua");
        const auto d = random_dataset(s, rng);
        const auto back = parse_csv(to_canonical_csv(d), s);
        CHECK(back.report.rows_rejected == 0);
        CHECK(back.dataset == d);
    }
}

TEST_CASE("missing fraction ignores row order")
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const auto s = builtin_schema("ds2-opcua");
        auto d = random_dataset(s, rng);
        const auto a = parse_csv(to_canonical_csv(d), s).report;
        rng.shuffle(d.records);
        const auto b = parse_csv(to_canonical_csv(d), s).report;
        CHECK(a.missing_fraction == b.missing_fraction);
        CHECK(a.per_column_missing == b.per_column_missing);
    }
}

TEST_CASE("load_dataset reports a missing file")
{
    try {
        load_dataset("/nonexistent/file.csv", builtin_schema("ds2-opcua"));
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io_error);
    }
}
