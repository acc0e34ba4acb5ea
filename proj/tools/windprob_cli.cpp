// windprob: simulate, prepare, tune, train, predict, baseline and evaluate.
//
//   windprob simulate --out sim
//   windprob prepare  --input sim --out data
//   windprob tune     --data data --head cqr --out tune
//   windprob train    --data data --head cqr [--params tune/best.json] --out model
//   windprob predict  --data data --model model --out pred
//   windprob baseline calibrate-wake --data data --out wake
//   windprob baseline wake --data data --calibration wake/calibration.json --out pred
//   windprob evaluate --data data --predictions pred/cqr.csv --predictions pred/wake.csv --ablation --out report
//
// Every run writes config.json (the resolved configuration) and manifest.json into --out.

#include "windprob/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace windprob;
using namespace windprob::pipeline;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out = ".";
};

struct Run {
    Config cfg;
    std::string out;
    Manifest manifest;
    std::vector<std::string> outputs;

    Run(const Globals& g, std::string command) : out(g.out) {
        cfg = g.config_path.empty() ? config_from_json(nlohmann::json::object()) : load_config(g.config_path);
        if (g.seed) {
            cfg.seed = *g.seed;
        }
        cfg.scenario.seed = cfg.seed;
        fs::create_directories(out);
        manifest.command = std::move(command);
        manifest.seed = cfg.seed;
        const auto config_text = to_json(cfg).dump(2) + "\n";
        manifest.config_sha256 = sha256_hex(config_text);
        write("config.json", config_text);
        if (!g.config_path.empty()) {
            manifest.add_input(g.config_path);
        }
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = fs::path(out) / name;
        fs::create_directories(path.parent_path());
        text::write_file(path.string(), content);
        outputs.push_back(name);
    }

    /// Records every regular file below `dir` as an input, keyed by `<dir basename>/<relative path>`.
    void add_input_dir(const std::string& dir) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir)) {
            if (e.is_regular_file() && e.path().filename() != "manifest.json") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        const auto base = fs::path(dir).lexically_normal().filename().string();
        for (const auto& f : files) {
            const auto rel = fs::relative(f, dir).generic_string();
            manifest.inputs.push_back({(base.empty() ? fs::path(dir).parent_path().filename().string() : base) + "/" + rel,
                                       sha256_hex(text::read_file(f.string()))});
        }
    }

    void finish() {
        manifest.add_outputs(out, outputs);
        write_manifest(manifest, out);
    }
};

SplitRole parse_role(const std::string& s) {
    if (s == "train") {
        return SplitRole::Train;
    }
    if (s == "calibration") {
        return SplitRole::Calibration;
    }
    if (s == "test") {
        return SplitRole::Test;
    }
    fail(ErrorCode::InvalidArgument, "unknown split '" + s + "' (expected train, calibration or test)");
}

void cmd_simulate(const Globals& g) {
    Run run(g, "simulate");
    const auto data = generate_synthetic(run.cfg.scenario);
    if (!run.cfg.scenario.layout_file.empty()) {
        run.manifest.add_input(run.cfg.scenario.layout_file);
    }
    run.write("forecasts.csv", forecasts_to_csv(data.forecasts));
    run.write("production.csv", production_to_csv(data.production));
    run.write("flags.csv", flags_to_csv(data.flags));
    run.write("reference.csv", reference_to_csv(data.reference));
    run.write("truth.csv", truth_to_csv(data.truth));
    run.write("layout.txt", format_layouts(data.layouts));
    run.finish();
    std::cout << "simulated " << data.forecasts.size() << " hours for " << data.layouts.size() << " farms\n";
}

struct PrepareArgs {
    std::string input, forecasts, production, flags, reference, layout;
};

void cmd_prepare(const Globals& g, const PrepareArgs& a) {
    Run run(g, "prepare");
    auto pick = [&](const std::string& explicit_path, const std::string& name) -> std::string {
        if (!explicit_path.empty()) {
            return explicit_path;
        }
        if (!a.input.empty() && fs::exists(fs::path(a.input) / name)) {
            return (fs::path(a.input) / name).string();
        }
        return {};
    };
    const auto forecasts = pick(a.forecasts, "forecasts.csv");
    const auto production = pick(a.production, "production.csv");
    const auto flags = pick(a.flags, "flags.csv");
    const auto reference = pick(a.reference, "reference.csv");
    const auto layout = pick(a.layout, "layout.txt");
    require(!forecasts.empty() && !production.empty() && !layout.empty(), ErrorCode::InvalidArgument,
            "prepare needs forecasts, production and layout files (--input or explicit paths)");
    PrepareInputs in;
    in.forecasts = forecasts_from_csv(text::read_file(forecasts));
    in.production = production_from_csv(text::read_file(production));
    in.layouts = load_layouts(layout);
    for (const auto& p : {forecasts, production, layout}) {
        run.manifest.add_input(p);
    }
    if (!flags.empty()) {
        in.flags = flags_from_csv(text::read_file(flags));
        run.manifest.add_input(flags);
    }
    if (!reference.empty()) {
        in.reference = reference_from_csv(text::read_file(reference));
        run.manifest.add_input(reference);
    }
    const auto ds = prepare_dataset(in, run.cfg);
    for (const auto& f : save_dataset(ds, run.out)) {
        run.outputs.push_back(f);
    }
    run.finish();
    std::cout << "prepared " << ds.farms.size() << " farms, " << ds.feature_names.size() << " features; removed "
              << ds.balancing_removed << " balancing and " << ds.economic_removed << " economic rows\n";
}

void cmd_tune(const Globals& g, const std::string& data, const std::string& head_name) {
    Run run(g, "tune");
    run.add_input_dir(data);
    const auto ds = load_dataset(data);
    const Head head = parse_head(head_name);
    const auto result = tune_head(ds, head, run.cfg, run.cfg.seed);
    std::string log;
    for (const auto& t : result.trials) {
        log += to_json(t).dump() + "\n";
    }
    run.write("trials.jsonl", log);
    run.write("best.json", best_to_json(head, result).dump(2) + "\n");
    run.finish();
    std::cout << "best trial " << result.best_trial().index << ": calibration CRPS "
              << text::format_double(*result.best_trial().score) << "\n";
}

void cmd_train(const Globals& g, const std::string& data, const std::string& head_name, const std::string& params) {
    Run run(g, "train");
    run.add_input_dir(data);
    const auto ds = load_dataset(data);
    const Head head = parse_head(head_name);
    HeadsConfig heads = run.cfg.heads;
    if (!params.empty()) {
        heads = with_point(heads, head, best_from_json(nlohmann::json::parse(text::read_file(params)), head));
        run.manifest.add_input(params);
    }
    for (const auto& m : train_all(head, heads, ds, run.cfg.seed)) {
        run.write("models/" + m.farm_id + ".json", to_json(m).dump() + "\n");
    }
    run.finish();
    std::cout << "trained " << to_string(head) << " for " << ds.farms.size() << " farms\n";
}

void cmd_predict(const Globals& g, const std::string& data, const std::string& model_dir, const std::string& split) {
    Run run(g, "predict");
    run.add_input_dir(data);
    run.add_input_dir(model_dir);
    const auto ds = load_dataset(data);
    std::vector<HeadModel> models;
    for (const auto& f : ds.farms) {
        models.push_back(head_from_json(nlohmann::json::parse(
            text::read_file((fs::path(model_dir) / "models" / (f.farm_id + ".json")).string()))));
    }
    for (const auto& m : models) {
        require(m.head == models.front().head, ErrorCode::InvalidArgument, "model directory mixes heads");
    }
    const auto name = to_string(models.front().head) + ".csv";
    run.write(name, predictions_to_csv(predict_all(ds, parse_role(split), models, run.cfg.seed)));
    run.finish();
    std::cout << "wrote " << name << "\n";
}

void cmd_baseline(const Globals& g, const std::string& kind, const std::string& data, const std::string& calibration,
                  const std::string& split) {
    Run run(g, "baseline " + kind);
    run.add_input_dir(data);
    const auto ds = load_dataset(data);
    if (kind == "calibrate-wake") {
        std::vector<std::pair<std::string, wake::CalibrationReport>> reports;
        for (const auto& f : ds.farms) {
            reports.emplace_back(f.farm_id, calibrate_farm_wake(ds.layout(f.farm_id), f, ds.reference, run.cfg.wake));
            std::cout << f.farm_id << ": k_a " << text::format_double(reports.back().second.params.k_a) << ", k_b "
                      << text::format_double(reports.back().second.params.k_b) << "\n";
        }
        run.write("calibration.json", calibrations_to_json(reports).dump(2) + "\n");
        run.finish();
        return;
    }
    require(kind == "power-curve" || kind == "wake", ErrorCode::InvalidArgument,
            "baseline must be power-curve, wake or calibrate-wake");
    std::map<std::string, wake::WakeParams> params;
    if (!calibration.empty()) {
        params = calibrations_from_json(nlohmann::json::parse(text::read_file(calibration)));
        run.manifest.add_input(calibration);
    }
    const auto preds = baseline_predictions(ds, parse_role(split), kind == "wake" ? Baseline::Wake : Baseline::PowerCurve,
                                            params, run.cfg.wake.params);
    run.write(kind + ".csv", predictions_to_csv(preds));
    run.finish();
    std::cout << "wrote " << kind << ".csv\n";
}

void cmd_evaluate(const Globals& g, const std::string& data, const std::vector<std::string>& predictions,
                  const std::string& split, bool ablation) {
    Run run(g, "evaluate");
    run.add_input_dir(data);
    const auto ds = load_dataset(data);
    const auto role = parse_role(split);
    std::string table;
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& p : predictions) {
        run.manifest.add_input(p);
        const auto forecasts = join_predictions(ds, role, predictions_from_csv(text::read_file(p)));
        const auto report = eval::build_report(fs::path(p).stem().string(), forecasts, run.cfg.eval.alphas);
        table += eval::format_table(report) + "\n";
        reports.push_back(eval::to_json(report));
    }
    nlohmann::json out{{"format", "windprob.evaluation"}, {"split", split}, {"reports", reports}};
    if (ablation) {
        const auto r = run_ablation(ds, run.cfg, run.cfg.seed);
        table += format_ablation(r);
        out["ablation"] = to_json(r);
    }
    run.write("report.txt", table);
    run.write("report.json", out.dump(2) + "\n");
    run.finish();
    std::cout << table;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic day-ahead wind power forecasting"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every stochastic step (overrides the config)");
    app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Generate the synthetic scenario as CSV files");

    PrepareArgs pa;
    auto* prepare = app.add_subcommand("prepare", "Filter, split and build features into a dataset bundle");
    prepare->add_option("--input", pa.input, "Directory holding forecasts.csv, production.csv, flags.csv, reference.csv, layout.txt");
    prepare->add_option("--forecasts", pa.forecasts, "Ensemble forecast CSV");
    prepare->add_option("--production", pa.production, "Production CSV");
    prepare->add_option("--flags", pa.flags, "Balancing activation CSV");
    prepare->add_option("--reference", pa.reference, "Reference (reanalysis) wind CSV");
    prepare->add_option("--layout", pa.layout, "Farm layout file");

    std::string data, head = "cqr", params, model, split = "test", calibration, kind;
    std::vector<std::string> predictions;
    bool ablation = false;

    auto* tune = app.add_subcommand("tune", "Random search scored on the calibration split");
    tune->add_option("--data", data, "Dataset bundle")->required();
    tune->add_option("--head", head, "cqr, ngboost or diffusion");

    auto* train = app.add_subcommand("train", "Train one model per farm");
    train->add_option("--data", data, "Dataset bundle")->required();
    train->add_option("--head", head, "cqr, ngboost or diffusion");
    train->add_option("--params", params, "best.json from tune");

    auto* predict = app.add_subcommand("predict", "Predictive distributions for a split");
    predict->add_option("--data", data, "Dataset bundle")->required();
    predict->add_option("--model", model, "Directory written by train")->required();
    predict->add_option("--split", split, "train, calibration or test");

    auto* baseline = app.add_subcommand("baseline", "Engineering baselines: power-curve, wake, calibrate-wake");
    baseline->add_option("kind", kind, "power-curve, wake or calibrate-wake")->required();
    baseline->add_option("--data", data, "Dataset bundle")->required();
    baseline->add_option("--calibration", calibration, "calibration.json from calibrate-wake");
    baseline->add_option("--split", split, "train, calibration or test");

    auto* evaluate = app.add_subcommand("evaluate", "Scores, region breakdown and input ablation");
    evaluate->add_option("--data", data, "Dataset bundle")->required();
    evaluate->add_option("--predictions", predictions, "Prediction CSV (repeatable)");
    evaluate->add_option("--split", split, "train, calibration or test");
    evaluate->add_flag("--ablation", ablation, "Retrain on ensemble, single-provider and reference inputs");

    CLI11_PARSE(app, argc, argv);
    try {
        if (simulate->parsed()) {
            cmd_simulate(g);
        } else if (prepare->parsed()) {
            cmd_prepare(g, pa);
        } else if (tune->parsed()) {
            cmd_tune(g, data, head);
        } else if (train->parsed()) {
            cmd_train(g, data, head, params);
        } else if (predict->parsed()) {
            cmd_predict(g, data, model, split);
        } else if (baseline->parsed()) {
            cmd_baseline(g, kind, data, calibration, split);
        } else if (evaluate->parsed()) {
            require(!predictions.empty() || ablation, ErrorCode::InvalidArgument,
                    "evaluate needs --predictions or --ablation");
            cmd_evaluate(g, data, predictions, split, ablation);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
