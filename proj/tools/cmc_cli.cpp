// cmc: world generation, exploration sweeps and evaluation tables.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmc/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    std::vector<std::string> classes{"dense"};
    int worlds = 20;
    std::int64_t steps = -1;
    std::vector<std::string> strategies;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::vector<std::int64_t> checkpoints;
    std::vector<std::int64_t> task_checkpoints;
    int vi_steps = 10;
    double gamma = 1.0;
    double q_alpha = 0.2;
    double q_gamma = 0.95;
    std::string peig_init = "prior-pig";
    int trials = 1;
    int workers = 1;
    int accuracy_trials = 50;
    int horizon = 10;
    std::string curves;
};

cmc::ExperimentConfig make_config(const Options& o, const std::string& cls) {
    cmc::ExperimentConfig c;
    c.world_class = cmc::parse_world_class(cls);
    c.n_worlds = o.worlds;
    c.n_steps = o.steps;
    if (!o.strategies.empty()) c.strategies = o.strategies;
    c.master_seed = o.seed;
    c.checkpoints = o.checkpoints;
    c.task_checkpoints = o.task_checkpoints;
    c.vi_steps = o.vi_steps;
    c.gamma = o.gamma;
    c.q_alpha = o.q_alpha;
    c.q_gamma = o.q_gamma;
    if (o.peig_init == "zero") c.peig_init = cmc::PeigInit::Zero;
    else if (o.peig_init != "prior-pig") throw std::invalid_argument("peig-init must be prior-pig or zero");
    c.trials = o.trials;
    c.workers = o.workers;
    c.accuracy_trials = o.accuracy_trials;
    c.controllability_horizon = o.horizon;
    cmc::validate(c);
    return c;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

void write_manifest(const fs::path& dir, const std::vector<cmc::ExperimentConfig>& configs, const std::string& command) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& c : configs) runs.push_back(cmc::manifest(c, command));
    auto f = open_out(dir / "manifest.json");
    f << nlohmann::json{{"version", cmc::kVersion}, {"command", command}, {"runs", runs}}.dump(2) << '\n';
}

std::string command_line(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) out += (i ? " " : "") + std::string(argv[i]);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exploration in controllable Markov chains"};
    app.set_config("--config", "", "key = value file mirroring the flags; flags override it");
    app.require_subcommand(1);

    Options o;
    app.add_option("--class", o.classes, "dense, maze, onetwothree (comma separated)")->delimiter(',');
    app.add_option("--worlds", o.worlds, "worlds per class")->check(CLI::PositiveNumber);
    app.add_option("--steps", o.steps, "exploration steps (default per class)");
    app.add_option("--strategies", o.strategies, "strategy names (comma separated)")->delimiter(',');
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--checkpoints", o.checkpoints, "checkpoint steps (comma separated)")->delimiter(',');
    app.add_option("--task-checkpoints", o.task_checkpoints, "steps at which task losses are computed")
        ->delimiter(',');
    app.add_option("--vi-steps", o.vi_steps, "value-iteration backups");
    app.add_option("--gamma", o.gamma, "value-iteration discount");
    app.add_option("--q-alpha", o.q_alpha, "Q-learning rate");
    app.add_option("--q-gamma", o.q_gamma, "Q-learning discount");
    app.add_option("--peig-init", o.peig_init, "prior-pig or zero");
    app.add_option("--trials", o.trials, "trials per (world, strategy)");
    app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);

    auto* gen = app.add_subcommand("gen", "write world bundles")->fallthrough();
    auto* explore = app.add_subcommand("explore", "learning curves")->fallthrough();
    auto* accuracy = app.add_subcommand("pig-accuracy", "predicted vs realized information gain")->fallthrough();
    accuracy->add_option("--accuracy-trials", o.accuracy_trials, "trials per world");
    auto* structure = app.add_subcommand("structure", "structure index and controllability")->fallthrough();
    structure->add_option("--horizon", o.horizon, "controllability horizon");
    structure->add_option("--curves", o.curves, "curves.csv to join embodiment indices from");
    auto* tasks = app.add_subcommand("tasks", "navigation and reward losses")->fallthrough();
    auto* report = app.add_subcommand("report", "aggregate curves into AUC summaries")->fallthrough();
    report->add_option("--curves", o.curves, "curves.csv (default <out>/curves.csv)");

    CLI11_PARSE(app, argc, argv);
    const std::string command = command_line(argc, argv);

    try {
        const fs::path dir(o.out);
        fs::create_directories(dir);
        std::vector<cmc::ExperimentConfig> configs;
        for (const auto& cls : o.classes) configs.push_back(make_config(o, cls));

        if (gen->parsed()) {
            for (const auto& c : configs)
                for (int w = 0; w < c.n_worlds; ++w) {
                    auto f = open_out(dir / ("world_" + cmc::to_string(c.world_class) + "_" + std::to_string(w + 1) +
                                             ".json"));
                    f << cmc::world_to_json(cmc::make_world(c, w), w + 1).dump(2) << '\n';
                }
        } else if (explore->parsed()) {
            auto curves = open_out(dir / "curves.csv");
            auto events = open_out(dir / "events.jsonl");
            std::vector<cmc::RunRecord> all;
            for (const auto& c : configs) {
                auto records = cmc::run_exploration(c);
                all.insert(all.end(), records.begin(), records.end());
            }
            cmc::write_curves_csv(curves, all);
            cmc::write_events_jsonl(events, all);
            bool any_tasks = false;
            for (const auto& r : all) any_tasks = any_tasks || !r.tasks.empty();
            if (any_tasks) {
                auto t = open_out(dir / "tasks.csv");
                cmc::write_tasks_csv(t, all);
            }
        } else if (accuracy->parsed()) {
            auto f = open_out(dir / "pig_accuracy.csv");
            std::vector<cmc::PigAccuracyRow> rows;
            for (const auto& c : configs) {
                auto r = cmc::run_pig_accuracy(c);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            cmc::write_pig_accuracy_csv(f, rows);
        } else if (structure->parsed()) {
            std::vector<cmc::RunRecord> records;
            if (!o.curves.empty()) {
                std::ifstream in(o.curves);
                if (!in) throw std::runtime_error("cannot read " + o.curves);
                records = cmc::read_curves_csv(in);
            }
            std::vector<cmc::StructureRow> rows;
            for (const auto& c : configs) {
                auto r = cmc::run_structure_analysis(c, records);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            auto f = open_out(dir / "structure.csv");
            cmc::write_structure_csv(f, rows, o.horizon);
        } else if (tasks->parsed()) {
            std::vector<cmc::RunRecord> all;
            for (const auto& c : configs) {
                auto r = cmc::run_tasks(c);
                all.insert(all.end(), r.begin(), r.end());
            }
            auto t = open_out(dir / "tasks.csv");
            cmc::write_tasks_csv(t, all);
            auto ranks = cmc::task_ranks(all);
            auto r = open_out(dir / "task_ranks.csv");
            cmc::write_ranks_csv(r, ranks);
            auto e = open_out(dir / "events.jsonl");
            cmc::write_events_jsonl(e, all);
        } else if (report->parsed()) {
            const std::string path = o.curves.empty() ? (dir / "curves.csv").string() : o.curves;
            std::ifstream in(path);
            if (!in) throw std::runtime_error("cannot read " + path);
            const auto records = cmc::read_curves_csv(in);
            auto f = open_out(dir / "report.csv");
            cmc::write_report_csv(f, cmc::summarize(records), cmc::class_embodiment_index(records));
            return 0;
        }
        write_manifest(dir, configs, command);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
