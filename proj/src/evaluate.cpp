#include <otids/evaluate.hpp>
#include <algorithm>
#include <chrono>
#include <numeric>

namespace otids {

ConfusionMatrix confusion(const Labels& predicted, const Labels& truth)
{
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::length_mismatch, "predicted has " + std::to_string(predicted.size()) +
                                                    " labels, truth has " + std::to_string(truth.size()));
    }
    ConfusionMatrix c;
    for (Index i = 0; i < truth.size(); ++i) {
        const bool p = predicted(i) == 1;
        const bool t = truth(i) == 1;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (p) ++c.fp;
        else ++c.fn;
    }
    return c;
}

Metrics metrics(const ConfusionMatrix& c)
{
    if (c.total() == 0) throw Error(ErrorCode::empty_evaluation, "confusion matrix is empty");
    Metrics m;
    const auto tp = static_cast<double>(c.tp);
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
    else m.precision_undefined = true;
    if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
    else m.recall_undefined = true;
    if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    else m.f1_undefined = true;
    return m;
}

nlohmann::json to_json(const EvaluationReport& r)
{
    nlohmann::json flags = nlohmann::json::array();
    if (r.metrics.precision_undefined) flags.push_back("precision_undefined");
    if (r.metrics.recall_undefined) flags.push_back("recall_undefined");
    if (r.metrics.f1_undefined) flags.push_back("f1_undefined");
    nlohmann::json j = {
        {"schema_version", kReportSchemaVersion},
        {"dataset_id", r.dataset_id},
        {"model", {{"kind", r.model.kind}, {"config", r.model.config}, {"seed", r.model.seed}}},
        {"split", {{"fraction", r.split.fraction}, {"seed", r.split.seed},
                   {"train_rows", r.split.train_rows}, {"test_rows", r.split.test_rows}}},
        {"confusion", {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}}},
        {"metrics", {{"accuracy", r.metrics.accuracy}, {"precision", r.metrics.precision},
                     {"recall", r.metrics.recall}, {"f1", r.metrics.f1}, {"flags", flags}}},
        {"timing", {{"train_s", r.train_seconds}, {"predict_s", r.predict_seconds}}},
    };
    if (!r.extra.empty()) j["extra"] = r.extra;
    return j;
}

std::vector<std::string> validate_report_json(const nlohmann::json& j)
{
    std::vector<std::string> problems;
    auto need = [&](const nlohmann::json& obj, const std::string& path, const char* key, auto predicate) {
        if (!obj.is_object() || !obj.contains(key)) {
            problems.push_back("missing " + path + key);
            return false;
        }
        if (!predicate(obj.at(key))) {
            problems.push_back("wrong type for " + path + key);
            return false;
        }
        return true;
    };
    auto is_num = [](const nlohmann::json& v) { return v.is_number(); };
    auto is_uint = [](const nlohmann::json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); };
    auto is_obj = [](const nlohmann::json& v) { return v.is_object(); };
    auto is_str = [](const nlohmann::json& v) { return v.is_string(); };
    auto is_ratio = [](const nlohmann::json& v) { return v.is_number() && v.get<double>() >= 0 && v.get<double>() <= 1; };

    if (need(j, "", "schema_version", is_num) && j.at("schema_version") != kReportSchemaVersion) {
        problems.push_back("unsupported schema_version");
    }
    need(j, "", "dataset_id", is_str);
    if (need(j, "", "model", is_obj)) {
        need(j.at("model"), "model.", "kind", is_str);
        need(j.at("model"), "model.", "config", [](const nlohmann::json&) { return true; });
        need(j.at("model"), "model.", "seed", is_uint);
    }
    if (need(j, "", "split", is_obj)) {
        need(j.at("split"), "split.", "fraction", is_ratio);
        need(j.at("split"), "split.", "seed", is_uint);
    }
    if (need(j, "", "confusion", is_obj)) {
        for (const char* k : {"tp", "tn", "fp", "fn"}) need(j.at("confusion"), "confusion.", k, is_uint);
    }
    if (need(j, "", "metrics", is_obj)) {
        for (const char* k : {"accuracy", "precision", "recall", "f1"}) need(j.at("metrics"), "metrics.", k, is_ratio);
        need(j.at("metrics"), "metrics.", "flags", [](const nlohmann::json& v) { return v.is_array(); });
    }
    if (need(j, "", "timing", is_obj)) {
        need(j.at("timing"), "timing.", "train_s", is_num);
        need(j.at("timing"), "timing.", "predict_s", is_num);
    }
    return problems;
}

std::string_view to_string(ModelKind k)
{
    switch (k) {
        case ModelKind::rf: return "rf";
        case ModelKind::svm: return "svm";
        case ModelKind::ocsvm: return "ocsvm";
        case ModelKind::ensemble: return "ensemble";
    }
    return "unknown";
}

ModelKind model_kind_from_string(std::string_view s)
{
    if (s == "rf") return ModelKind::rf;
    if (s == "svm") return ModelKind::svm;
    if (s == "ocsvm") return ModelKind::ocsvm;
    if (s == "ensemble") return ModelKind::ensemble;
    throw Error(ErrorCode::invalid_config, "unknown model kind '" + std::string(s) + "'");
}

std::vector<Index> rank_descending(const Vector& scores)
{
    std::vector<Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
    return order;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Labels gather_labels(const Labels& y, const IndexList& rows)
{
    Labels out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
    return out;
}

Labels to_signed(const Labels& y01)
{
    return (y01.array() == 1).select(Labels::Ones(y01.size()), -Labels::Ones(y01.size()));
}

Labels to_binary(const Labels& pm)
{
    return (pm.array() == 1).select(Labels::Ones(pm.size()), Labels::Zero(pm.size()));
}

/// Preprocessing fitted on the training block and applied to both blocks.
struct Prepared
{
    FeatureMatrix train, test;
    nlohmann::json state = nlohmann::json::object();
};

Prepared prepare(const FeatureMatrix& train, const FeatureMatrix& test, const PreprocessOptions& opt)
{
    Prepared p{train, test};
    const auto rows = all_rows(train.rows());
    if (opt.scale) {
        const auto s = fit_scaler(p.train, rows);
        p.train = apply_scaler(s, p.train);
        p.test = apply_scaler(s, p.test);
        p.state["scaler"] = to_json(s);
    }
    if (opt.pca) {
        const auto pca = fit_pca(p.train, rows, *opt.pca);
        p.train = apply_pca(pca, p.train);
        p.test = apply_pca(pca, p.test);
        p.state["pca"] = to_json(pca);
    }
    return p;
}

nlohmann::json settings_json(const ModelSettings& s)
{
    nlohmann::json pre = {{"scale", s.preprocess.scale}};
    if (s.preprocess.pca) {
        if (const auto* c = std::get_if<ComponentCount>(&*s.preprocess.pca)) pre["pca_k"] = c->k;
        else pre["pca_threshold"] = std::get<VarianceThreshold>(*s.preprocess.pca).fraction;
    }
    nlohmann::json j = {{"preprocess", pre}};
    switch (s.kind) {
        case ModelKind::rf: j["forest"] = to_json(s.forest); break;
        case ModelKind::svm: j["svm"] = to_json(s.svm); break;
        case ModelKind::ocsvm:
            j["one_class"] = {{"kernel", to_json(s.one_class.kernel)}, {"nu", s.one_class.nu},
                              {"tolerance", s.one_class.tolerance}, {"max_passes", s.one_class.max_passes}};
            break;
        case ModelKind::ensemble:
            j["forest"] = to_json(s.forest);
            j["svm"] = to_json(s.svm);
            j["top_k"] = s.top_k;
            break;
    }
    return j;
}

EvaluationReport base_report(const ModelSettings& settings, const SplitIndices& split, const std::string& dataset_id)
{
    EvaluationReport r;
    r.dataset_id = dataset_id;
    r.model.kind = std::string(to_string(settings.kind));
    r.model.config = settings_json(settings);
    r.model.seed = settings.kind == ModelKind::svm     ? settings.svm.seed
                   : settings.kind == ModelKind::ocsvm ? settings.one_class.seed
                                                       : settings.forest.seed;
    r.split = {split.train_fraction, split.seed, split.train.size(), split.test.size()};
    return r;
}

} // namespace

EvaluationReport benchmark(const FeatureMatrix& m, const Labels& labels, const SplitIndices& split,
                           const ModelSettings& settings, const std::string& dataset_id,
                           nlohmann::json* model_json)
{
    if (settings.kind == ModelKind::ensemble) {
        return ensemble_rf_svm(m, labels, split, settings, dataset_id, model_json).report;
    }
    if (labels.size() != m.rows()) throw Error(ErrorCode::length_mismatch, "label count differs from row count");
    auto report = base_report(settings, split, dataset_id);
    const Labels y_train = gather_labels(labels, split.train);
    const Labels y_test = gather_labels(labels, split.test);

    const auto start = Clock::now();
    auto data = prepare(m.select_rows(split.train), m.select_rows(split.test), settings.preprocess);
    Labels predicted;
    nlohmann::json model;
    double train_s = 0;
    switch (settings.kind) {
        case ModelKind::rf: {
            const auto forest = train_forest(data.train, y_train, settings.forest);
            train_s = seconds_since(start);
            const auto t0 = Clock::now();
            predicted = predict_forest(forest, data.test);
            report.predict_seconds = seconds_since(t0);
            if (model_json) model = to_json(forest);
            break;
        }
        case ModelKind::svm: {
            const auto svm = train_svm(data.train, to_signed(y_train), settings.svm);
            train_s = seconds_since(start);
            const auto t0 = Clock::now();
            predicted = to_binary(decide(svm, data.test));
            report.predict_seconds = seconds_since(t0);
            report.extra["converged"] = svm.converged;
            report.extra["iterations"] = svm.iterations;
            report.extra["support_vectors"] = svm.alpha.size();
            if (model_json) model = to_json(svm);
            break;
        }
        case ModelKind::ocsvm: {
            IndexList normal_rows;
            for (Index i = 0; i < y_train.size(); ++i) {
                if (y_train(i) != 1) normal_rows.push_back(i);
            }
            if (normal_rows.empty()) throw Error(ErrorCode::degenerate_labels, "no normal rows to train on");
            const auto oc = train_one_class(data.train.select_rows(normal_rows), settings.one_class);
            train_s = seconds_since(start);
            const auto t0 = Clock::now();
            // Outliers are flagged as attacks.
            predicted = (one_class_decide(oc, data.test).array() < 0).select(Labels::Ones(y_test.size()),
                                                                               Labels::Zero(y_test.size()));
            report.predict_seconds = seconds_since(t0);
            report.extra["converged"] = oc.converged;
            if (model_json) model = to_json(oc);
            break;
        }
        case ModelKind::ensemble: break;
    }
    report.train_seconds = train_s;
    report.confusion = confusion(predicted, y_test);
    report.metrics = metrics(report.confusion);
    if (model_json) {
        *model_json = {{"schema_version", 1},
                       {"kind", report.model.kind},
                       {"feature_names", m.column_names},
                       {"preprocess", data.state},
                       {"model", std::move(model)}};
    }
    return report;
}

EnsembleResult ensemble_rf_svm(const FeatureMatrix& m, const Labels& labels, const SplitIndices& split,
                               const ModelSettings& settings, const std::string& dataset_id,
                               nlohmann::json* model_json)
{
    if (settings.top_k < 1 || static_cast<Index>(settings.top_k) > m.cols()) {
        throw Error(ErrorCode::invalid_component_count,
                    "top_k " + std::to_string(settings.top_k) + " outside 1.." + std::to_string(m.cols()));
    }
    EnsembleResult out;
    out.report = base_report(settings, split, dataset_id);
    auto& report = out.report;
    const Labels y_train = gather_labels(labels, split.train);
    const Labels y_test = gather_labels(labels, split.test);
    const FeatureMatrix train_full = m.select_rows(split.train);
    const FeatureMatrix test_full = m.select_rows(split.test);

    const auto start = Clock::now();
    const auto forest = train_forest(train_full, y_train, settings.forest);
    const double forest_s = seconds_since(start);
    const auto order = rank_descending(forest.gini_importance);
    out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(settings.top_k));
    for (auto c : out.selected) out.selected_names.push_back(m.column_names[static_cast<std::size_t>(c)]);

    // Column order of the reduced matrix stays canonical.
    std::vector<Index> columns = out.selected;
    std::sort(columns.begin(), columns.end());
    const auto svm_start = Clock::now();
    auto data = prepare(train_full.select_cols(columns), test_full.select_cols(columns), settings.preprocess);
    const auto svm = train_svm(data.train, to_signed(y_train), settings.svm);
    const double svm_s = seconds_since(svm_start);
    report.train_seconds = forest_s + svm_s;

    const auto t0 = Clock::now();
    const Labels predicted = to_binary(decide(svm, data.test));
    report.predict_seconds = seconds_since(t0);
    report.confusion = confusion(predicted, y_test);
    report.metrics = metrics(report.confusion);

    report.extra["selected_features"] = out.selected_names;
    report.extra["forest_train_s"] = forest_s;
    report.extra["reduced_svm_train_s"] = svm_s;
    report.extra["converged"] = svm.converged;
    if (static_cast<Index>(settings.top_k) < m.cols()) {
        const auto full_start = Clock::now();
        auto full = prepare(train_full, test_full, settings.preprocess);
        (void)train_svm(full.train, to_signed(y_train), settings.svm);
        const double full_s = seconds_since(full_start);
        report.extra["full_svm_train_s"] = full_s;
        report.extra["svm_train_delta_s"] = full_s - svm_s;
    }
    if (model_json) {
        *model_json = {{"schema_version", 1},
                       {"kind", "ensemble"},
                       {"feature_names", m.column_names},
                       {"selected_columns", columns},
                       {"preprocess", data.state},
                       {"forest", to_json(forest)},
                       {"model", to_json(svm)}};
    }
    return out;
}

} // namespace otids
