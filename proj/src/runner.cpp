#include "mgml/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mgml/serialize.hpp"

namespace fs = std::filesystem;

namespace mgml {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string csv_field(double v) { return std::isnan(v) ? "" : fmt(v); }

void write_metrics_csv(const TrainResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "epoch,lr,train_loss,oa_mb,oa_ffb,oa_fem3,oa_fem4,oa_ensemble\n";
    for (const EpochStats& e : result.curve) {
        out << e.epoch << ',' << fmt(e.lr) << ',' << fmt(e.train_loss) << ','
            << csv_field(e.eval.oa_mb) << ',' << csv_field(e.eval.oa_ffb) << ','
            << csv_field(e.eval.oa_fem3) << ',' << csv_field(e.eval.oa_fem4) << ','
            << fmt(e.eval.oa_ensemble) << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

std::string eval_json(const EvalResult& eval) {
    auto field = [](double v) { return std::isnan(v) ? std::string("null") : fmt(v); };
    std::ostringstream os;
    os << "{\n"
       << "  \"oa_ensemble\": " << fmt(eval.oa_ensemble) << ",\n"
       << "  \"oa_mb\": " << field(eval.oa_mb) << ",\n"
       << "  \"oa_ffb\": " << field(eval.oa_ffb) << ",\n"
       << "  \"oa_fem3\": " << field(eval.oa_fem3) << ",\n"
       << "  \"oa_fem4\": " << field(eval.oa_fem4) << "\n"
       << "}\n";
    return os.str();
}

RunConfig load_config(const std::string& config_path, long long seed_override) {
    RunConfig cfg = parse_config_file(config_path);
    if (seed_override >= 0) {
        cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    }
    return cfg;
}

std::string grid_label(const CropConfig& crop) {
    const int patches = (crop.grid_k + 1) * (crop.grid_k + 1);
    return std::to_string(patches) + "crop";
}

} // namespace

void run_train(const std::string& config_path, const std::string& out_dir,
               long long seed_override, const std::string& branches) {
    RunConfig cfg = load_config(config_path, seed_override);
    const BranchSelect select =
        branches.empty() ? BranchSelect{} : BranchSelect::parse(branches);
    auto [train_set, test_set] = prepare_data(cfg);

    MgmlNet model(cfg.model, cfg.train.seed);
    TrainResult result = train_model(model, train_set, test_set, cfg.train, select);

    fs::create_directories(out_dir);
    write_metrics_csv(result, (fs::path(out_dir) / "metrics.csv").string());
    std::vector<ParamPtr> params = model.params();
    save_checkpoint(params, (fs::path(out_dir) / "checkpoint.mgc").string());

    std::ofstream summary((fs::path(out_dir) / "summary.json").string(),
                          std::ios::binary);
    summary << "{\n  \"branches\": \"" << select.str() << "\",\n  \"epochs\": "
            << cfg.train.epochs << ",\n  \"seed\": " << cfg.train.seed
            << ",\n  \"final\": " << eval_json(result.curve.back().eval) << "}\n";
}

std::string run_eval(const std::string& config_path,
                     const std::string& checkpoint_path,
                     const std::string& branches) {
    RunConfig cfg = load_config(config_path, -1);
    const BranchSelect select =
        branches.empty() ? BranchSelect{} : BranchSelect::parse(branches);
    auto [train_set, test_set] = prepare_data(cfg);
    MgmlNet model(cfg.model, cfg.train.seed);
    std::vector<ParamPtr> params = model.params();
    load_checkpoint(params, checkpoint_path);
    return eval_json(evaluate(model, test_set, select, cfg.train.batch_size));
}

std::string run_ablate(const std::string& config_path, const std::string& out_dir,
                       long long seed_override) {
    RunConfig cfg = load_config(config_path, seed_override);
    struct Variant {
        const char* name;
        BranchSelect select;
    };
    const Variant variants[] = {
        {"baseline", {false, false}},
        {"+FFB", {true, false}},
        {"+FEM", {false, true}},
        {"full", {true, true}},
    };

    std::ostringstream table;
    std::ostringstream csv;
    table << "variant        mean_oa   std_oa\n";
    csv << "variant,mean_oa,std_oa\n";
    std::vector<ExperimentResult> results;
    for (const Variant& v : variants) {
        ExperimentResult r = run_experiment(cfg, v.select);
        table << v.name << std::string(15 - std::string(v.name).size(), ' ')
              << fmt2(r.mean()) << " +- " << fmt2(r.stddev()) << "\n";
        csv << v.name << ',' << fmt(r.mean()) << ',' << fmt(r.stddev()) << '\n';
        results.push_back(std::move(r));
    }

    // Arrangement-confusable pairwise accuracy, baseline vs full, averaged
    // over pairs and runs (synthetic data only).
    if (cfg.data.kind == DataKind::Synthetic) {
        auto pair_mean = [&](const ExperimentResult& r) {
            double acc = 0.0;
            int count = 0;
            for (auto [a, b] : arrangement_confusable_pairs()) {
                if (b >= cfg.model.num_classes) continue;
                for (const TrainResult& run : r.runs) {
                    acc += pairwise_accuracy(run.curve.back().eval, a, b);
                    ++count;
                }
            }
            return count ? acc / count : std::nan("");
        };
        const double base_pair = pair_mean(results[0]);
        const double full_pair = pair_mean(results[3]);
        if (!std::isnan(base_pair)) {
            table << "confusable-pair accuracy: baseline " << fmt2(base_pair)
                  << ", full " << fmt2(full_pair) << "\n";
            csv << "pairwise_baseline," << fmt(base_pair) << ",\n";
            csv << "pairwise_full," << fmt(full_pair) << ",\n";
        }
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out((fs::path(out_dir) / "ablation.csv").string(),
                          std::ios::binary);
        out << csv.str();
        if (!out) throw IoError("cannot write ablation.csv under " + out_dir);
    }
    return table.str();
}

std::string run_crop_compare(const std::string& config_path,
                             const std::string& out_dir, long long seed_override) {
    RunConfig cfg = load_config(config_path, seed_override);
    std::ostringstream table;
    std::ostringstream csv;
    table << "strategy       mean_oa   std_oa\n";
    csv << "strategy,mean_oa,std_oa\n";
    for (int pass = 0; pass < 2; ++pass) {
        RunConfig variant = cfg;
        variant.model.crop.strategy =
            pass == 0 ? CropStrategy::SevenCrop : CropStrategy::GridCrop;
        const std::string label =
            pass == 0 ? "7crop" : grid_label(variant.model.crop);
        ExperimentResult r = run_experiment(variant, BranchSelect{true, true});
        table << label << std::string(15 - label.size(), ' ') << fmt2(r.mean())
              << " +- " << fmt2(r.stddev()) << "\n";
        csv << label << ',' << fmt(r.mean()) << ',' << fmt(r.stddev()) << '\n';
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out((fs::path(out_dir) / "crop_compare.csv").string(),
                          std::ios::binary);
        out << csv.str();
        if (!out) throw IoError("cannot write crop_compare.csv under " + out_dir);
    }
    return table.str();
}

void run_dump_features(const std::string& config_path,
                       const std::string& checkpoint_path, int sample_index,
                       const std::string& out_dir) {
    RunConfig cfg = load_config(config_path, -1);
    auto [train_set, test_set] = prepare_data(cfg);
    if (sample_index < 0 || sample_index >= static_cast<int>(test_set.size())) {
        throw ConfigError("sample index " + std::to_string(sample_index) +
                          " outside test set of " + std::to_string(test_set.size()));
    }
    MgmlNet model(cfg.model, cfg.train.seed);
    std::vector<ParamPtr> params = model.params();
    load_checkpoint(params, checkpoint_path);

    const Tensor& x = test_set.images[sample_index];
    BranchOutputs out = model.forward(x, BranchSelect{true, true},
                                      /*retain_features=*/true);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_tensor(x, (dir / "x.mgt").string());
    for (std::size_t i = 0; i < out.features_main.size(); ++i) {
        save_tensor(out.features_main[i],
                    (dir / ("f" + std::to_string(i) + ".mgt")).string());
    }
    for (std::size_t i = 0; i < out.features_ffb.size(); ++i) {
        save_tensor(out.features_ffb[i],
                    (dir / ("g" + std::to_string(i) + ".mgt")).string());
    }
    save_tensor(out.v3, (dir / "v3.mgt").string());
    save_tensor(out.v4, (dir / "v4.mgt").string());

    std::ofstream txt((dir / "predictions.txt").string(), std::ios::binary);
    auto row = [&](const char* name, const Tensor& p) {
        txt << name << ":";
        for (int j = 0; j < p.shape().c; ++j) txt << ' ' << fmt(p.at(0, j, 0, 0));
        txt << '\n';
    };
    row("p_mb", out.p_mb);
    row("p_ffb", out.p_ffb);
    row("p_fem3", out.p_fem3);
    row("p_fem4", out.p_fem4);
    row("p_sum", out.p_sum);
    txt << "predicted: " << out.predicted[0] << '\n';
    if (!txt) throw IoError("cannot write predictions.txt under " + out_dir);
}

void run_gen_data(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_config(config_path, -1);
    if (cfg.data.kind != DataKind::Synthetic) {
        throw ConfigError("gen-data requires data.kind = synthetic");
    }
    SceneSpec spec;
    spec.num_classes = cfg.model.num_classes;
    spec.image_size = cfg.data.image_size;
    spec.noise_std = cfg.data.noise_std;
    spec.seed = cfg.data.seed;
    Dataset ds = generate_scenes(spec, cfg.data.per_class);

    fs::create_directories(out_dir);
    std::ofstream manifest((fs::path(out_dir) / "manifest.tsv").string(),
                           std::ios::binary);
    std::vector<int> counters(ds.num_classes(), 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string& cls = ds.class_names[ds.labels[i]];
        fs::create_directories(fs::path(out_dir) / cls);
        char name[32];
        std::snprintf(name, sizeof name, "img_%04d.ppm", counters[ds.labels[i]]++);
        const std::string rel = cls + "/" + name;
        write_ppm(ds.images[i], (fs::path(out_dir) / rel).string());
        manifest << rel << '\t' << cls << '\n';
    }
    if (!manifest) throw IoError("cannot write manifest under " + out_dir);
}

std::string run_inspect_anchors(int h, int w, double sigma,
                                const std::string& strategy, int k) {
    CropConfig cfg;
    cfg.sigma = sigma;
    cfg.grid_k = k;
    if (strategy == "7crop") {
        cfg.strategy = CropStrategy::SevenCrop;
    } else if (strategy == "grid") {
        cfg.strategy = CropStrategy::GridCrop;
    } else {
        throw ConfigError("strategy must be '7crop' or 'grid', got " + strategy);
    }
    std::ostringstream os;
    for (const Anchor& a : propose(cfg, h, w)) {
        os << a.x1 << ',' << a.y1 << ',' << a.x2 << ',' << a.y2 << '\n';
    }
    return os.str();
}

} // namespace mgml
