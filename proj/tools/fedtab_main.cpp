#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedtab/checkpoint.hpp"
#include "fedtab/config.hpp"
#include "fedtab/data.hpp"
#include "fedtab/eval.hpp"
#include "fedtab/featurize.hpp"
#include "fedtab/federation.hpp"
#include "fedtab/model.hpp"

namespace {

using namespace fedtab;

void apply_seed_override(ExperimentConfig& cfg) {
    if (const char* env = std::getenv("FEDTAB_SEED")) {
        cfg.seed = std::strtoull(env, nullptr, 10);
    }
}

TabularDataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.data_kind == "synth")
        return synth_blobs(cfg.synth_classes, cfg.synth_dim, cfg.synth_per_class,
                           cfg.synth_spread, derive_seed(cfg.seed, 0xDA7A));
    if (cfg.data_kind == "series")
        return featurize_dataset(load_series_file(cfg.data_path));
    return load_tabular_csv(cfg.data_path);
}

struct Prepared {
    TabularDataset tab;
    PartitionPlan plan;
    TabNetConfig model_cfg;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared p;
    p.tab = build_dataset(cfg);
    p.plan = split_dataset(p.tab, cfg.split, cfg.federation.n_clients,
                           derive_seed(cfg.seed, 0x5B117), cfg.stratified);
    p.model_cfg = cfg.model;
    p.model_cfg.input_dim = static_cast<int>(p.tab.dim());
    p.model_cfg.n_classes = static_cast<int>(p.tab.class_names.size());
    p.model_cfg.validate();
    return p;
}

RunOptions options_of(const ExperimentConfig& cfg) {
    RunOptions o;
    o.history_path = cfg.history_path;
    o.checkpoint_every = cfg.checkpoint_every;
    o.checkpoint_path = cfg.checkpoint_path;
    o.parallel_clients = cfg.parallel_clients;
    return o;
}

int cmd_featurize(const std::string& input, const std::string& output) {
    const SeriesDataset ds = load_series_file(input);
    const TabularDataset tab = featurize_dataset(ds);
    save_tabular_csv(tab, output, std::string("catalog:") + kCatalogVersion);
    std::cout << "featurized " << tab.n() << " series into " << tab.dim()
              << " features -> " << output << "\n";
    return 0;
}

int cmd_synth(const std::string& preset, const std::string& out_path, std::uint64_t seed) {
    TabularDataset tab;
    if (preset == "blobs") {
        tab = synth_blobs(3, 10, 200, 0.25, seed);
    } else {
        throw std::invalid_argument("unknown synth preset: " + preset);
    }
    save_tabular_csv(tab, out_path);
    std::cout << "wrote " << tab.n() << " rows -> " << out_path << "\n";
    return 0;
}

int cmd_run(const std::string& config_path) {
    ExperimentConfig cfg = parse_config(config_path);
    apply_seed_override(cfg);
    std::cerr << config_to_string(cfg);

    Prepared p = prepare(cfg);
    Federation fed = init_federation(p.tab, p.plan, p.model_cfg, cfg.federation, cfg.seed);
    const auto reports = run_experiment(fed, p.tab, cfg.federation, options_of(cfg));

    std::vector<double> acc, loss;
    for (const auto& r : reports) {
        acc.push_back(r.test_accuracy);
        loss.push_back(r.test_loss);
    }
    const HistorySummary s = summarize(acc, loss);
    std::cout << "rounds: " << reports.size() << "\n"
              << "max test accuracy: " << s.max_acc << " (round " << s.max_round << ")\n"
              << "final test accuracy: " << s.final_acc << "\n"
              << "min test loss: " << s.min_loss << "\n"
              << "history: " << cfg.history_path << "\n";
    return 0;
}

int cmd_centralized(const std::string& config_path) {
    ExperimentConfig cfg = parse_config(config_path);
    apply_seed_override(cfg);
    std::cerr << config_to_string(cfg);

    Prepared p = prepare(cfg);
    ModelParams final_params = init_params(p.model_cfg, 0);
    const auto reports = centralized_train(p.tab, p.plan, p.model_cfg, cfg.federation,
                                           cfg.seed, options_of(cfg), &final_params);

    std::vector<double> acc, loss;
    for (const auto& r : reports) {
        acc.push_back(r.test_accuracy);
        loss.push_back(r.test_loss);
    }
    const HistorySummary s = summarize(acc, loss);
    std::cout << "epochs: " << cfg.federation.total_rounds * cfg.federation.local_epochs << "\n"
              << "max test accuracy: " << s.max_acc << " (round " << s.max_round << ")\n"
              << "final test accuracy: " << s.final_acc << "\n"
              << "history: " << cfg.history_path << "\n";
    return 0;
}

int cmd_report(const std::string& history_path) {
    std::ifstream in(history_path);
    if (!in) throw std::runtime_error("cannot open history: " + history_path);

    std::vector<double> acc, loss;
    nlohmann::json best_confusion;
    std::vector<std::string> classes;
    double best_acc = -1.0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        acc.push_back(j.at("test_acc").get<double>());
        loss.push_back(j.at("test_loss").get<double>());
        if (j.contains("confusion") && acc.back() > best_acc) {
            best_acc = acc.back();
            best_confusion = j.at("confusion");
            classes.clear();
            if (j.contains("classes"))
                for (const auto& c : j.at("classes")) classes.push_back(c.get<std::string>());
        }
    }
    if (acc.empty()) throw std::runtime_error(history_path + ": empty history");

    const HistorySummary s = summarize(acc, loss);
    std::cout << "rounds: " << acc.size() << "\n"
              << "max test accuracy: " << s.max_acc << " (round " << s.max_round << ")\n"
              << "final test accuracy: " << s.final_acc << "\n"
              << "min test loss: " << s.min_loss << "\n";

    if (!best_confusion.is_null()) {
        ConfusionMatrix cm;
        cm.n_classes = static_cast<int>(best_confusion.size());
        for (const auto& row : best_confusion)
            for (const auto& v : row) cm.counts.push_back(v.get<long>());
        if (classes.empty())
            for (int k = 0; k < cm.n_classes; ++k) classes.push_back("class_" + std::to_string(k));
        cm.class_names = classes;
        write_confusion_csv(cm, "confusion.csv");
        std::cout << render_confusion(cm);
        std::cout << "confusion matrix (best round) -> confusion.csv\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated tabular learning simulator"};
    app.require_subcommand(1);

    std::string input, output, config_path, history_path, out_path;
    std::string preset = "blobs";
    std::uint64_t seed = 42;

    auto* featurize = app.add_subcommand("featurize", "extract features from a series file");
    featurize->add_option("--input", input, "series file")->required();
    featurize->add_option("--output", output, "output tabular csv")->required();

    auto* synth = app.add_subcommand("synth", "generate a synthetic tabular dataset");
    synth->add_option("--preset", preset, "preset name (blobs)")->required();
    synth->add_option("--out", out_path, "output csv path")->required();
    synth->add_option("--seed", seed, "rng seed");

    auto* run = app.add_subcommand("run", "run a federated experiment");
    run->add_option("--config", config_path, "experiment config file")->required();

    auto* centralized = app.add_subcommand("centralized", "run the centralized baseline");
    centralized->add_option("--config", config_path, "experiment config file")->required();

    auto* report = app.add_subcommand("report", "summarize a history file");
    report->add_option("--history", history_path, "history jsonl")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (featurize->parsed()) return cmd_featurize(input, output);
        if (synth->parsed()) return cmd_synth(preset, out_path, seed);
        if (run->parsed()) return cmd_run(config_path);
        if (centralized->parsed()) return cmd_centralized(config_path);
        if (report->parsed()) return cmd_report(history_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
