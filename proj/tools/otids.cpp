#include <otids/pipeline.hpp>
#include <otids/synthetic.hpp>
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

using namespace otids;

namespace {

void add_pipeline_options(CLI::App& cmd, PipelineConfig& c, std::string& model, std::string& target)
{
    cmd.add_option("dataset,--dataset", c.dataset_path, "ARFF or CSV file")->required();
    cmd.add_option("--schema", c.schema_id, "ds1-modbus | ds2-opcua")->capture_default_str();
    cmd.add_option("--interpolate", c.interpolate, "time interpolation of missing cells")->capture_default_str();
    cmd.add_option("--scale", c.scale, "zero-mean/unit-variance scaling (default: on except rf)");
    cmd.add_option("--pca-k", c.pca_k, "keep k principal components");
    cmd.add_option("--pca-threshold", c.pca_threshold, "keep components up to this explained variance");
    cmd.add_option("--model", model, "rf | svm | ocsvm | ensemble")->capture_default_str();
    cmd.add_option("--target", target, "binary | category")->capture_default_str();
    cmd.add_option("--trees", c.n_trees)->capture_default_str();
    cmd.add_option("--max-depth", c.max_depth, "0 = unlimited")->capture_default_str();
    cmd.add_option("--min-leaf", c.min_samples_leaf)->capture_default_str();
    cmd.add_option("--mtry", c.features_per_split, "features per split, 0 = sqrt(p)")->capture_default_str();
    cmd.add_option("--kernel", c.kernel, "linear | rbf | polynomial")->capture_default_str();
    cmd.add_option("--gamma", c.gamma, "kernel gamma (default 1/(p*var))");
    cmd.add_option("--C", c.cost)->capture_default_str();
    cmd.add_option("--weight-normal", c.weight_normal, "class weight of normal rows (default balanced)");
    cmd.add_option("--weight-attack", c.weight_attack, "class weight of attack rows (default balanced)");
    cmd.add_option("--tolerance", c.tolerance)->capture_default_str();
    cmd.add_option("--max-passes", c.max_passes)->capture_default_str();
    cmd.add_option("--nu", c.nu)->capture_default_str();
    cmd.add_option("--top-k", c.top_k, "ensemble feature count")->capture_default_str();
    cmd.add_option("--split", c.train_fraction, "training fraction")->capture_default_str();
    cmd.add_option("--seed", c.seed)->capture_default_str();
    cmd.add_option("--threads", c.threads)->capture_default_str();
}

bool resolve(PipelineConfig& c, const std::string& model, const std::string& target)
{
    try {
        c.model = model_kind_from_string(model);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return false;
    }
    if (target == "binary") c.target = Target::binary;
    else if (target == "category") c.target = Target::category;
    else {
        std::cerr << "error: unknown target '" << target << "'\n";
        return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"otids: attack detection on industrial control-system datasets"};
    app.set_config("--config", "", "TOML config file; flags override its values");
    app.require_subcommand(1);

    std::string path, schema = "ds1-modbus", emit;
    auto* ingest = app.add_subcommand("ingest", "parse a dataset and report missingness");
    ingest->add_option("path", path)->required();
    ingest->add_option("--schema", schema)->capture_default_str();
    ingest->add_option("--emit", emit, "write canonical CSV");

    PipelineConfig train_cfg;
    std::string train_model = "rf", train_target = "binary";
    auto* train = app.add_subcommand("train", "train a model and evaluate on the held-out split");
    add_pipeline_options(*train, train_cfg, train_model, train_target);
    train->add_option("--model-out", train_cfg.model_out, "model JSON path");
    train->add_option("--out,--report-out", train_cfg.report_out, "report JSON path");

    PipelineConfig imp_cfg;
    std::string imp_model = "rf", imp_target = "binary", method = "gini";
    int repeats = 5;
    bool json = false;
    auto* importance = app.add_subcommand("importance", "rank features by random-forest importance");
    add_pipeline_options(*importance, imp_cfg, imp_model, imp_target);
    importance->add_option("--method", method, "gini | permutation")
        ->check(CLI::IsMember({"gini", "permutation"}))
        ->capture_default_str();
    importance->add_option("--repeats", repeats, "permutation repeats")->capture_default_str();
    importance->add_flag("--json", json);

    PipelineConfig grid_cfg;
    std::string grid_model = "svm", grid_target = "binary", grid_path;
    int folds = 5;
    auto* grid = app.add_subcommand("gridsearch", "stratified k-fold search over SVM configs");
    add_pipeline_options(*grid, grid_cfg, grid_model, grid_target);
    grid->add_option("--grid", grid_path, "JSON array of SVM configs")->required();
    grid->add_option("--folds", folds)->capture_default_str();

    std::string synth_kind = "ds1", synth_out;
    std::size_t synth_rows = 0;
    std::uint64_t synth_seed = 0;
    double mcar = 0;
    auto* synth = app.add_subcommand("synth", "write a synthetic DS1- or DS2-shaped CSV");
    synth->add_option("kind", synth_kind)->check(CLI::IsMember({"ds1", "ds2"}))->capture_default_str();
    synth->add_option("--rows", synth_rows, "row count (default 5000 / 4910)");
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--mcar", mcar, "fraction of feature cells to delete")->capture_default_str();
    synth->add_option("-o,--out", synth_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    if (*ingest) return cmd_ingest(path, schema, emit, std::cout, std::cerr);
    if (*train) {
        if (!resolve(train_cfg, train_model, train_target)) return 4;
        return cmd_train(train_cfg, std::cout, std::cerr);
    }
    if (*importance) {
        if (!resolve(imp_cfg, imp_model, imp_target)) return 4;
        const auto m = method == "gini" ? ImportanceMethod::gini : ImportanceMethod::permutation;
        return cmd_importance(imp_cfg, m, repeats, json, std::cout, std::cerr);
    }
    if (*grid) {
        if (!resolve(grid_cfg, grid_model, grid_target)) return 4;
        return cmd_gridsearch(grid_cfg, grid_path, folds, std::cout, std::cerr);
    }
    if (*synth) {
        try {
            Dataset d = [&] {
                if (synth_kind == "ds1") {
                    Ds1GeneratorConfig g;
                    if (synth_rows) g.rows = synth_rows;
                    g.seed = synth_seed;
                    return generate_ds1(g);
                }
                Ds2GeneratorConfig g;
                if (synth_rows) g.rows = synth_rows;
                g.seed = synth_seed;
                return generate_ds2(g);
            }();
            if (mcar > 0) d = delete_mcar(d, mcar, synth_seed);
            if (synth_out.empty()) {
                write_canonical(d, std::cout);
            } else {
                std::ofstream f(synth_out, std::ios::binary);
                if (!f) throw Error(ErrorCode::io_error, "cannot write '" + synth_out + "'");
                write_canonical(d, f);
            }
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code_for(e.code());
        }
        return 0;
    }
    return 0;
}
