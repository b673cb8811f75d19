#include <otids/preprocess.hpp>
#include <otids/random.hpp>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace otids {

namespace {

void require_complete(const FeatureMatrix& m, const IndexList& rows)
{
    for (auto r : rows) {
        if (m.missing.row(r).any()) {
            throw Error(ErrorCode::not_interpolated,
                        "row " + std::to_string(r) + " has missing cells; interpolate first");
        }
    }
}

void check_rows(const FeatureMatrix& m, const IndexList& rows)
{
    if (rows.empty()) throw Error(ErrorCode::empty_input, "no rows to fit on");
    for (auto r : rows) {
        if (r < 0 || r >= m.rows()) throw Error(ErrorCode::shape_mismatch, "row index out of range");
    }
}

Matrix gather(const Matrix& x, const IndexList& rows)
{
    Matrix out(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
    return out;
}

} // namespace

IndexList all_rows(Index n)
{
    IndexList rows(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    return rows;
}

FeatureMatrix make_feature_matrix(Matrix values, std::vector<std::string> names)
{
    FeatureMatrix m;
    if (names.empty()) {
        for (Index j = 0; j < values.cols(); ++j) names.push_back("f" + std::to_string(j));
    }
    m.missing = values.array().isNaN();
    m.values = std::move(values);
    m.column_names = std::move(names);
    return m;
}

FeatureMatrix FeatureMatrix::select_rows(const IndexList& rows) const
{
    FeatureMatrix out;
    out.values = gather(values, rows);
    out.missing.resize(static_cast<Index>(rows.size()), missing.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.missing.row(static_cast<Index>(i)) = missing.row(rows[i]);
    out.column_names = column_names;
    return out;
}

FeatureMatrix FeatureMatrix::select_cols(const std::vector<Index>& cols) const
{
    FeatureMatrix out;
    out.values.resize(rows(), static_cast<Index>(cols.size()));
    out.missing.resize(rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto c = cols[j];
        if (c < 0 || c >= this->cols()) throw Error(ErrorCode::shape_mismatch, "column index out of range");
        out.values.col(static_cast<Index>(j)) = values.col(c);
        out.missing.col(static_cast<Index>(j)) = missing.col(c);
        out.column_names.push_back(column_names[static_cast<std::size_t>(c)]);
    }
    return out;
}

FeatureMatrix to_feature_matrix(const Dataset& d)
{
    const auto positions = d.schema.model_value_positions();
    const auto n = static_cast<Index>(d.records.size());
    const auto p = static_cast<Index>(positions.size());
    FeatureMatrix m;
    m.values.resize(n, p);
    m.missing.resize(n, p);
    m.column_names = d.schema.model_feature_names();
    for (Index i = 0; i < n; ++i) {
        const auto& rec = d.records[static_cast<std::size_t>(i)];
        if (rec.values.size() != d.schema.value_count()) {
            throw Error(ErrorCode::shape_mismatch, "record " + std::to_string(i) + " has wrong arity");
        }
        for (Index j = 0; j < p; ++j) {
            const auto& v = rec.values[positions[static_cast<std::size_t>(j)]];
            m.values(i, j) = v ? *v : std::numeric_limits<double>::quiet_NaN();
            m.missing(i, j) = !v.has_value();
        }
    }
    return m;
}

std::vector<double> interpolate_series(std::span<const double> t,
                                       std::span<const std::optional<double>> values,
                                       const std::string& column_name)
{
    const auto n = values.size();
    std::vector<double> out(n);
    std::vector<std::size_t> observed;
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i]) observed.push_back(i);
    }
    if (observed.empty()) {
        if (n == 0) return out;
        throw Error(ErrorCode::empty_column, "column '" + column_name + "' has no observed values");
    }
    std::size_t next = 0; // index into observed of the first observation at or after i
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i]) {
            out[i] = *values[i];
            ++next;
            continue;
        }
        if (next == 0) {
            out[i] = *values[observed.front()];
        } else if (next == observed.size()) {
            out[i] = *values[observed.back()];
        } else {
            const auto lo = observed[next - 1];
            const auto hi = observed[next];
            const double span = t[hi] - t[lo];
            double w = span > 0 ? (t[i] - t[lo]) / span : 0.5;
            w = std::clamp(std::isfinite(w) ? w : 0.5, 0.0, 1.0);
            const double a = *values[lo];
            const double b = *values[hi];
            out[i] = a + w * (b - a);
        }
    }
    return out;
}

Dataset interpolate_time(const Dataset& d)
{
    Dataset out = d;
    const auto n = d.records.size();
    const auto& schema = d.schema;
    auto column = [&](std::size_t pos) {
        std::vector<std::optional<double>> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = d.records[i].values.at(pos);
        return v;
    };

    std::vector<double> ordinal(n);
    for (std::size_t i = 0; i < n; ++i) ordinal[i] = static_cast<double>(i);

    std::vector<double> t;
    const auto ts_pos = schema.timestamp_value_position();
    if (ts_pos) {
        t = interpolate_series(ordinal, column(*ts_pos), schema.column(*schema.timestamp_column()).name);
    } else {
        t = ordinal;
        for (std::size_t i = 0; i < n; ++i) {
            if (d.records[i].timestamp) t[i] = *d.records[i].timestamp;
        }
    }

    for (std::size_t pos = 0; pos < schema.value_count(); ++pos) {
        const auto filled = ts_pos && pos == *ts_pos
                                ? t
                                : interpolate_series(t, column(pos), schema.column(schema.value_columns()[pos]).name);
        for (std::size_t i = 0; i < n; ++i) out.records[i].values[pos] = filled[i];
    }
    for (std::size_t i = 0; i < n; ++i) out.records[i].timestamp = t[i];
    return out;
}

SplitIndices stratified_split(const Labels& labels, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::invalid_config, "train fraction must lie strictly between 0 and 1");
    }
    std::map<int, IndexList> strata;
    for (Index i = 0; i < labels.size(); ++i) strata[labels(i)].push_back(i);
    if (strata.empty()) throw Error(ErrorCode::empty_input, "no labels to split");

    SplitIndices out;
    out.seed = seed;
    out.train_fraction = train_fraction;
    Rng rng(seed);
    for (auto& [label, idx] : strata) {
        if (idx.size() < 2) {
            throw Error(ErrorCode::stratum_too_small,
                        "class " + std::to_string(label) + " has " + std::to_string(idx.size()) + " record(s)");
        }
        rng.shuffle(idx);
        const auto n_train = static_cast<std::size_t>(
            std::floor(static_cast<double>(idx.size()) * train_fraction + 0.5));
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitIndices stratified_split(const Dataset& d, double train_fraction, std::uint64_t seed)
{
    return stratified_split(binary_labels(d), train_fraction, seed);
}

std::vector<int> stratified_kfold(const Labels& labels, int folds, std::uint64_t seed)
{
    if (folds < 2) throw Error(ErrorCode::invalid_config, "need at least 2 folds");
    std::map<int, IndexList> strata;
    for (Index i = 0; i < labels.size(); ++i) strata[labels(i)].push_back(i);
    std::vector<int> fold(static_cast<std::size_t>(labels.size()), 0);
    Rng rng(seed);
    for (auto& [label, idx] : strata) {
        if (idx.size() < static_cast<std::size_t>(folds)) {
            throw Error(ErrorCode::stratum_too_small,
                        "class " + std::to_string(label) + " has fewer records than folds");
        }
        rng.shuffle(idx);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            fold[static_cast<std::size_t>(idx[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
        }
    }
    return fold;
}

ScalerState fit_scaler(const FeatureMatrix& m, const IndexList& rows)
{
    check_rows(m, rows);
    require_complete(m, rows);
    const Matrix x = gather(m.values, rows);
    ScalerState s;
    s.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - s.mean.transpose();
    s.stddev = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().transpose();
    for (Index j = 0; j < x.cols(); ++j) {
        if ((x.col(j).array() == x(0, j)).all()) s.stddev(j) = 0.0;
    }
    return s;
}

FeatureMatrix apply_scaler(const ScalerState& s, const FeatureMatrix& m)
{
    if (m.cols() != s.mean.size()) throw Error(ErrorCode::shape_mismatch, "scaler column count differs");
    if (!m.complete()) throw Error(ErrorCode::not_interpolated, "matrix has missing cells");
    FeatureMatrix out = m;
    for (Index j = 0; j < m.cols(); ++j) {
        if (s.stddev(j) > 0) {
            out.values.col(j) = (m.values.col(j).array() - s.mean(j)) / s.stddev(j);
        } else {
            out.values.col(j).setZero();
        }
    }
    return out;
}

double PcaState::explained_fraction(Index upto) const
{
    const double total = explained_variance.sum();
    if (total <= 0) return 1.0;
    return explained_variance.head(upto).sum() / total;
}

PcaState fit_pca(const FeatureMatrix& m, const IndexList& rows, PcaTarget target)
{
    check_rows(m, rows);
    require_complete(m, rows);
    const Index p = m.cols();
    if (const auto* c = std::get_if<ComponentCount>(&target); c && (c->k < 1 || c->k > p)) {
        throw Error(ErrorCode::invalid_component_count,
                    "requested " + std::to_string(c->k) + " components of " + std::to_string(p) + " columns");
    }
    if (const auto* v = std::get_if<VarianceThreshold>(&target); v && !(v->fraction > 0 && v->fraction <= 1)) {
        throw Error(ErrorCode::invalid_config, "variance threshold must lie in (0, 1]");
    }

    const Matrix x = gather(m.values, rows);
    PcaState s;
    s.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - s.mean.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Index n = eig.eigenvalues().size();
    s.explained_variance = eig.eigenvalues().reverse().cwiseMax(0.0);
    Matrix all = eig.eigenvectors().rowwise().reverse().transpose();
    for (Index r = 0; r < n; ++r) {
        Index arg;
        all.row(r).cwiseAbs().maxCoeff(&arg);
        if (all(r, arg) < 0) all.row(r) *= -1.0;
    }

    if (const auto* c = std::get_if<ComponentCount>(&target)) {
        s.k = c->k;
    } else {
        const double t = std::get<VarianceThreshold>(target).fraction;
        s.k = n;
        for (Index k = 1; k <= n; ++k) {
            if (s.explained_fraction(k) >= t - 1e-12) {
                s.k = k;
                break;
            }
        }
    }
    s.components = all.topRows(s.k);
    return s;
}

FeatureMatrix apply_pca(const PcaState& p, const FeatureMatrix& m)
{
    if (m.cols() != p.mean.size()) throw Error(ErrorCode::shape_mismatch, "PCA column count differs");
    if (!m.complete()) throw Error(ErrorCode::not_interpolated, "matrix has missing cells");
    FeatureMatrix out;
    out.values = (m.values.rowwise() - p.mean.transpose()) * p.components.transpose();
    out.missing = MaskMatrix::Constant(out.values.rows(), out.values.cols(), false);
    for (Index k = 0; k < p.k; ++k) out.column_names.push_back("PC" + std::to_string(k + 1));
    return out;
}

Matrix reconstruct_pca(const PcaState& p, const Matrix& projected)
{
    return (projected * p.components).rowwise() + p.mean.transpose();
}

namespace {

nlohmann::json vec_json(const Vector& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vec_from(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

} // namespace

nlohmann::json to_json(const ScalerState& s)
{
    return {{"schema_version", 1}, {"kind", "zero_mean_scaler"}, {"mean", vec_json(s.mean)},
            {"stddev", vec_json(s.stddev)}};
}

ScalerState scaler_from_json(const nlohmann::json& j)
{
    if (j.at("schema_version").get<int>() != 1) throw Error(ErrorCode::parse_error, "unsupported scaler version");
    return {vec_from(j.at("mean")), vec_from(j.at("stddev"))};
}

nlohmann::json to_json(const PcaState& p)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < p.components.rows(); ++r) rows.push_back(vec_json(p.components.row(r).transpose()));
    return {{"schema_version", 1}, {"kind", "pca"}, {"k", p.k}, {"mean", vec_json(p.mean)},
            {"components", rows}, {"explained_variance", vec_json(p.explained_variance)}};
}

PcaState pca_from_json(const nlohmann::json& j)
{
    if (j.at("schema_version").get<int>() != 1) throw Error(ErrorCode::parse_error, "unsupported PCA version");
    PcaState p;
    p.k = j.at("k").get<Index>();
    p.mean = vec_from(j.at("mean"));
    p.explained_variance = vec_from(j.at("explained_variance"));
    p.components.resize(p.k, p.mean.size());
    for (Index r = 0; r < p.k; ++r) p.components.row(r) = vec_from(j.at("components").at(static_cast<std::size_t>(r))).transpose();
    return p;
}

} // namespace otids
