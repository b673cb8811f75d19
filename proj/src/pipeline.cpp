#include <otids/pipeline.hpp>
#include <otids/random.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace otids {

void check_config(const PipelineConfig& c)
{
    if (c.pca_k && c.pca_threshold) throw Error(ErrorCode::invalid_config, "set either a PCA component count or a variance threshold, not both");
    if (!(c.train_fraction > 0 && c.train_fraction < 1)) throw Error(ErrorCode::invalid_config, "split fraction must lie in (0, 1)");
    if (c.n_trees < 1) throw Error(ErrorCode::invalid_config, "--trees must be >= 1");
    if (c.min_samples_leaf < 1) throw Error(ErrorCode::invalid_config, "--min-leaf must be >= 1");
    if (!(c.cost > 0)) throw Error(ErrorCode::invalid_config, "--C must be positive");
    if (!(c.nu > 0 && c.nu <= 1)) throw Error(ErrorCode::invalid_config, "--nu must lie in (0, 1]");
    if (c.gamma && !(*c.gamma > 0)) throw Error(ErrorCode::invalid_config, "--gamma must be positive");
    if (c.weight_normal.has_value() != c.weight_attack.has_value()) {
        throw Error(ErrorCode::invalid_config, "give both class weights or neither");
    }
    if (c.target == Target::category && c.model != ModelKind::rf && c.model != ModelKind::svm) {
        throw Error(ErrorCode::invalid_config, "category target is supported for rf and svm only");
    }
    (void)kernel_kind_from_string(c.kernel);
}

ModelSettings model_settings(const PipelineConfig& c)
{
    ModelSettings s;
    s.kind = c.model;
    s.forest.n_trees = c.n_trees;
    s.forest.max_depth = c.max_depth;
    s.forest.min_samples_leaf = c.min_samples_leaf;
    s.forest.features_per_split = c.features_per_split;
    s.forest.seed = derive_seed(c.seed, "forest");
    s.forest.threads = c.threads;

    KernelSpec kernel{kernel_kind_from_string(c.kernel), c.gamma};
    s.svm.kernel = kernel;
    s.svm.cost = c.cost;
    if (c.weight_normal && c.weight_attack) s.svm.class_weights = ClassWeights{*c.weight_normal, *c.weight_attack};
    s.svm.tolerance = c.tolerance;
    s.svm.max_passes = c.max_passes;
    s.svm.seed = derive_seed(c.seed, "svm");

    s.one_class.kernel = kernel;
    s.one_class.nu = c.nu;
    s.one_class.tolerance = c.tolerance;
    s.one_class.max_passes = c.max_passes;
    s.one_class.seed = derive_seed(c.seed, "ocsvm");

    s.top_k = c.top_k;
    s.preprocess.scale = c.scale.value_or(c.model != ModelKind::rf);
    if (c.pca_k) s.preprocess.pca = ComponentCount{*c.pca_k};
    if (c.pca_threshold) s.preprocess.pca = VarianceThreshold{*c.pca_threshold};
    return s;
}

nlohmann::json to_json(const PipelineConfig& c, bool include_runtime)
{
    auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j = {
        {"dataset", c.dataset_path},
        {"schema", c.schema_id},
        {"interpolate", c.interpolate},
        {"scale", opt(c.scale)},
        {"pca_k", opt(c.pca_k)},
        {"pca_threshold", opt(c.pca_threshold)},
        {"model", to_string(c.model)},
        {"target", c.target == Target::binary ? "binary" : "category"},
        {"trees", c.n_trees},
        {"max_depth", c.max_depth},
        {"min_leaf", c.min_samples_leaf},
        {"features_per_split", c.features_per_split},
        {"kernel", c.kernel},
        {"gamma", opt(c.gamma)},
        {"C", c.cost},
        {"weight_normal", opt(c.weight_normal)},
        {"weight_attack", opt(c.weight_attack)},
        {"tolerance", c.tolerance},
        {"max_passes", c.max_passes},
        {"nu", c.nu},
        {"top_k", c.top_k},
        {"split", c.train_fraction},
        {"seed", c.seed},
    };
    if (include_runtime) {
        j["threads"] = c.threads;
        j["model_out"] = c.model_out;
        j["report_out"] = c.report_out;
    }
    return j;
}

PreparedData prepare_data(const PipelineConfig& c)
{
    check_config(c);
    const auto schema = builtin_schema(c.schema_id);
    auto ingested = load_dataset(c.dataset_path, schema);
    PreparedData p{std::move(ingested.dataset), std::move(ingested.report), {}, {}, {}, {}};
    if (c.interpolate) p.dataset = interpolate_time(p.dataset);
    p.matrix = to_feature_matrix(p.dataset);
    if (!p.matrix.complete()) {
        throw Error(ErrorCode::not_interpolated, "dataset has missing cells; enable interpolation");
    }
    p.labels = binary_labels(p.dataset);
    if (schema.category_label_column()) {
        bool all = true;
        for (const auto& r : p.dataset.records) all = all && r.category_label.has_value();
        if (all) p.categories = category_labels(p.dataset);
    }
    const Labels& strata = c.target == Target::category ? p.categories : p.labels;
    if (c.target == Target::category && strata.size() == 0) {
        throw Error(ErrorCode::missing_labels, "category target needs category labels");
    }
    p.split = stratified_split(strata, c.train_fraction, derive_seed(c.seed, "split"));
    return p;
}

namespace {

Labels gather(const Labels& y, const IndexList& rows)
{
    Labels out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
    return out;
}

Labels attack_of(const Labels& categories)
{
    return (categories.array() > 0).select(Labels::Ones(categories.size()), Labels::Zero(categories.size()));
}

/// Multi-category run: the model predicts categories; the confusion matrix is
/// over attack = category > 0, category accuracy is reported in `extra`.
TrainOutcome run_category(const PipelineConfig& c, const PreparedData& p, const ModelSettings& s)
{
    using Clock = std::chrono::steady_clock;
    TrainOutcome out;
    auto& report = out.report;
    report.dataset_id = c.schema_id;
    report.model.kind = std::string(to_string(c.model)) + "-category";
    report.split = {p.split.train_fraction, p.split.seed, p.split.train.size(), p.split.test.size()};

    FeatureMatrix train = p.matrix.select_rows(p.split.train);
    FeatureMatrix test = p.matrix.select_rows(p.split.test);
    const Labels y_train = gather(p.categories, p.split.train);
    const Labels y_test = gather(p.categories, p.split.test);
    nlohmann::json pre = nlohmann::json::object();
    if (s.preprocess.scale) {
        const auto sc = fit_scaler(train, all_rows(train.rows()));
        train = apply_scaler(sc, train);
        test = apply_scaler(sc, test);
        pre["scaler"] = to_json(sc);
    }
    if (s.preprocess.pca) {
        const auto pca = fit_pca(train, all_rows(train.rows()), *s.preprocess.pca);
        train = apply_pca(pca, train);
        test = apply_pca(pca, test);
        pre["pca"] = to_json(pca);
    }

    const auto start = Clock::now();
    Labels predicted;
    if (c.model == ModelKind::rf) {
        report.model.config = to_json(s.forest);
        report.model.seed = s.forest.seed;
        const auto forest = train_forest(train, y_train, s.forest);
        report.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        predicted = predict_forest(forest, test);
        out.model = to_json(forest);
    } else {
        report.model.config = to_json(s.svm);
        report.model.seed = s.svm.seed;
        const auto ovr = train_one_vs_rest(train, y_train, s.svm);
        report.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        predicted = predict_one_vs_rest(ovr, test);
        nlohmann::json models = nlohmann::json::array();
        for (const auto& m : ovr.models) models.push_back(to_json(m));
        out.model = {{"classes", ovr.classes}, {"models", models}};
    }
    report.predict_seconds = std::chrono::duration<double>(Clock::now() - start).count() - report.train_seconds;
    report.confusion = confusion(attack_of(predicted), attack_of(y_test));
    report.metrics = metrics(report.confusion);
    report.extra["category_accuracy"] =
        static_cast<double>((predicted.array() == y_test.array()).count()) / static_cast<double>(y_test.size());
    out.model = {{"schema_version", 1},
                 {"kind", report.model.kind},
                 {"feature_names", p.matrix.column_names},
                 {"preprocess", pre},
                 {"model", out.model}};
    return out;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
    f << text;
    if (!f) throw Error(ErrorCode::io_error, "failed writing '" + path + "'");
}

nlohmann::json ingest_json(const IngestReport& r)
{
    return {{"rows_read", r.rows_read},
            {"rows_rejected", r.rows_rejected},
            {"missing_cells", r.missing_cells},
            {"missing_fraction", r.missing_fraction},
            {"per_column_missing", r.per_column_missing}};
}

template <class F>
int guarded(std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    }
}

} // namespace

TrainOutcome run_train(const PipelineConfig& c)
{
    const auto p = prepare_data(c);
    const auto s = model_settings(c);
    TrainOutcome out;
    if (c.target == Target::category) {
        out = run_category(c, p, s);
    } else {
        out.report = benchmark(p.matrix, p.labels, p.split, s, c.schema_id, &out.model);
    }
    out.model["pipeline"] = to_json(c, false);
    out.report.extra["pipeline"] = to_json(c, true);
    out.report.extra["ingest"] = ingest_json(p.ingest);
    return out;
}

std::vector<ImportanceRow> run_importance(const PipelineConfig& c, ImportanceMethod method, int repeats)
{
    const auto p = prepare_data(c);
    auto s = model_settings(c);
    const FeatureMatrix train = p.matrix.select_rows(p.split.train);
    const Labels y_train = gather(p.labels, p.split.train);
    const auto forest = train_forest(train, y_train, s.forest);
    Vector scores;
    if (method == ImportanceMethod::gini) {
        scores = forest.gini_importance;
    } else {
        scores = permutation_importance(forest, p.matrix.select_rows(p.split.test), gather(p.labels, p.split.test),
                                        repeats, derive_seed(c.seed, "permutation"));
    }
    std::vector<ImportanceRow> rows;
    for (auto j : rank_descending(scores)) rows.push_back({p.matrix.column_names[static_cast<std::size_t>(j)], scores(j)});
    return rows;
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
        case ErrorCode::io_error:
        case ErrorCode::parse_error: return 2;
        case ErrorCode::unknown_schema:
        case ErrorCode::schema_mismatch: return 3;
        case ErrorCode::invalid_config:
        case ErrorCode::invalid_component_count: return 4;
        default: return 5;
    }
}

int cmd_ingest(const std::string& path, const std::string& schema_id, const std::string& emit_path,
               std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const auto schema = builtin_schema(schema_id);
        const auto result = load_dataset(path, schema);
        for (const auto& line : result.report.rejection_log) err << "rejected " << line << '\n';
        auto j = ingest_json(result.report);
        j["schema"] = schema_id;
        j["path"] = path;
        if (!result.dataset.records.empty() && result.dataset.records.front().binary_label) {
            bool labeled = true;
            for (const auto& r : result.dataset.records) labeled = labeled && r.binary_label.has_value();
            if (labeled) {
                const auto b = class_balance(result.dataset);
                j["attack_fraction"] = b.attack_fraction;
                j["attacks"] = b.attacks;
            }
        }
        if (!emit_path.empty()) {
            std::ofstream f(emit_path, std::ios::binary);
            if (!f) throw Error(ErrorCode::io_error, "cannot write '" + emit_path + "'");
            j["emitted_bytes"] = write_canonical(result.dataset, f);
        }
        err << "read " << result.report.rows_read << " rows (" << result.report.rows_rejected
            << " rejected), missing fraction " << result.report.missing_fraction << '\n';
        out << j.dump(2) << '\n';
        return 0;
    });
}

int cmd_train(const PipelineConfig& c, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const auto outcome = run_train(c);
        const auto report = to_json(outcome.report);
        if (!c.model_out.empty()) write_text(c.model_out, outcome.model.dump() + "\n");
        if (!c.report_out.empty()) write_text(c.report_out, report.dump(2) + "\n");
        const auto& m = outcome.report.metrics;
        err << std::fixed << std::setprecision(4) << to_string(c.model) << ": accuracy " << m.accuracy
            << " precision " << m.precision << " recall " << m.recall << " f1 " << m.f1 << " (train "
            << outcome.report.train_seconds << " s)\n";
        out << report.dump(2) << '\n';
        return 0;
    });
}

int cmd_importance(const PipelineConfig& c, ImportanceMethod method, int repeats, bool json,
                   std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const auto rows = run_importance(c, method, repeats);
        if (json) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : rows) j.push_back({{"feature", r.feature}, {"score", r.score}});
            out << nlohmann::json{{"method", method == ImportanceMethod::gini ? "gini" : "permutation"},
                                  {"pipeline", to_json(c)},
                                  {"ranking", j}}
                       .dump(2)
                << '\n';
            return 0;
        }
        out << std::left << std::setw(28) << "Feature" << "Relevance\n";
        for (const auto& r : rows) {
            out << std::left << std::setw(28) << r.feature << std::fixed << std::setprecision(6) << r.score << '\n';
        }
        return 0;
    });
}

int cmd_gridsearch(const PipelineConfig& c, const std::string& grid_path, int folds,
                   std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        std::vector<SvmConfig> grid;
        {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(read_file(grid_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::invalid_config, std::string("malformed grid file: ") + e.what());
            }
            if (!j.is_array() || j.empty()) throw Error(ErrorCode::invalid_config, "grid file must be a non-empty JSON array");
            for (const auto& entry : j) {
                auto cfg = svm_config_from_json(entry);
                cfg.seed = derive_seed(c.seed, "svm");
                grid.push_back(cfg);
            }
        }
        const auto p = prepare_data(c);
        FeatureMatrix train = p.matrix.select_rows(p.split.train);
        const Labels y_train = gather(p.labels, p.split.train);
        if (c.scale.value_or(true)) train = apply_scaler(fit_scaler(train, all_rows(train.rows())), train);
        Labels signed_train = (y_train.array() == 1).select(Labels::Ones(y_train.size()), -Labels::Ones(y_train.size()));
        const auto result = grid_search(train, signed_train, grid, folds, derive_seed(c.seed, "gridsearch"), c.threads);

        auto settings = model_settings(c);
        settings.kind = ModelKind::svm;
        settings.svm = result.best;
        const auto report = benchmark(p.matrix, p.labels, p.split, settings, c.schema_id);

        nlohmann::json table = nlohmann::json::array();
        for (std::size_t g = 0; g < grid.size(); ++g) {
            table.push_back({{"config", to_json(grid[g])}, {"mean_f1", result.mean_f1[g]}, {"fold_f1", result.fold_f1[g]}});
            err << "grid[" << g << "] mean F1 " << result.mean_f1[g] << '\n';
        }
        out << nlohmann::json{{"best_index", result.best_index},
                              {"best", to_json(result.best)},
                              {"scores", table},
                              {"test_report", to_json(report)},
                              {"pipeline", to_json(c)}}
                   .dump(2)
            << '\n';
        return 0;
    });
}

} // namespace otids
