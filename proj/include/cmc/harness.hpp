#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cmc/objectives.hpp"
#include "cmc/strategies.hpp"
#include "cmc/tasks.hpp"
#include "cmc/worlds.hpp"

namespace cmc {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr const char* kCurvesSchema = "cmc-curves/1";
inline constexpr const char* kPigAccuracySchema = "cmc-pig-accuracy/1";
inline constexpr const char* kStructureSchema = "cmc-structure/1";
inline constexpr const char* kTasksSchema = "cmc-tasks/1";
inline constexpr const char* kRanksSchema = "cmc-task-ranks/1";
inline constexpr const char* kReportSchema = "cmc-report/1";

struct ExperimentConfig {
    WorldClass world_class = WorldClass::Dense;
    int n_worlds = 20;
    std::int64_t n_steps = -1;  ///< -1: class default
    int trials = 1;
    std::vector<std::string> strategies{"random", "greedy-pig", "vi-pig", "unembodied-pig"};
    std::uint64_t master_seed = 1;
    std::vector<std::int64_t> checkpoints;       ///< empty: default schedule
    std::vector<std::int64_t> task_checkpoints;  ///< empty: no task evaluation during explore
    int vi_steps = 10;
    double gamma = 1.0;
    double q_alpha = 0.2;
    double q_gamma = 0.95;
    PeigInit peig_init = PeigInit::PriorPig;
    int workers = 1;

    // PIG accuracy experiment
    int accuracy_trials = 50;
    int accuracy_observations = 20;
    // structure analysis
    int controllability_horizon = 10;
    // task probes
    int reward_structures = 10;
    int reward_horizon = 100;
    double step_cap = kDefaultStepCap;

    std::int64_t steps() const;
    std::vector<std::int64_t> checkpoint_schedule() const;
    StrategySpec strategy(const std::string& name) const;
};

std::int64_t default_steps(WorldClass wc);
/// 0, log-spaced points and a linear grid of 100 intervals, merged and sorted.
std::vector<std::int64_t> default_checkpoints(std::int64_t n_steps);

/// Throws std::invalid_argument on a malformed config.
void validate(const ExperimentConfig& config);
nlohmann::json to_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

/// splitmix64 folding of `parts` into `master`.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);
std::uint64_t fnv1a(const std::string& text);

World make_world(const ExperimentConfig& config, int world_id);
std::vector<std::vector<double>> make_reward_structures(const ExperimentConfig& config, int world_id, int n_states);

struct TaskLoss {
    std::int64_t step = 0;
    double nav_loss = 0.0;
    double reward_loss = 0.0;
};

struct RunRecord {
    WorldClass world_class = WorldClass::Dense;
    int world_id = 0;
    std::string strategy;
    int trial = 0;
    std::uint64_t seed = 0;
    StateId start_state = 0;
    std::vector<std::int64_t> steps;
    std::vector<double> missing_info;
    std::vector<double> l1;
    std::vector<TaskLoss> tasks;
};

/// Runs one (world, strategy, trial) job.
RunRecord run_single(const ExperimentConfig& config, const World& world, int world_id, const std::string& strategy,
                     int trial);

/// Every (world, strategy, trial) job; results ordered by (world, strategy index, trial).
std::vector<RunRecord> run_exploration(const ExperimentConfig& config);

void write_curves_csv(std::ostream& out, std::span<const RunRecord> records);
void write_tasks_csv(std::ostream& out, std::span<const RunRecord> records);
void write_events_jsonl(std::ostream& out, std::span<const RunRecord> records);
std::vector<RunRecord> read_curves_csv(std::istream& in);

/// Trapezoidal area under missing information vs step.
double auc(std::span<const std::int64_t> steps, std::span<const double> values);
double auc(const RunRecord& record);
/// (AUC_greedy - AUC_unembodied) / AUC_unembodied; throws if the grids differ.
double embodiment_index(const RunRecord& greedy, const RunRecord& unembodied);
double embodiment_index(double greedy_auc, double unembodied_auc);

struct PigAccuracyRow {
    WorldClass world_class = WorldClass::Dense;
    int k = 0;
    double mean_pig = 0.0;
    double mean_ig = 0.0;
    double sd_pig = 0.0;
    double sd_ig = 0.0;
    double se_pig = 0.0;
    double se_ig = 0.0;
    double se_diff = 0.0;  ///< standard error of mean(pig - ig), clustered by row
    std::int64_t n = 0;
};

/// PIG before, and realized IG after, the k-th observation of every row of every world.
std::vector<PigAccuracyRow> run_pig_accuracy(const ExperimentConfig& config);
void write_pig_accuracy_csv(std::ostream& out, std::span<const PigAccuracyRow> rows);

struct StructureRow {
    WorldClass world_class = WorldClass::Dense;
    int world_id = 0;
    double structure_index = 0.0;
    std::vector<double> controllability;  ///< t = 1..horizon, averaged over start states
    std::optional<double> embodiment_index;
};

/// Per-world structure metrics; embodiment indices are joined when `records` has greedy-pig and unembodied-pig.
std::vector<StructureRow> run_structure_analysis(const ExperimentConfig& config, std::span<const RunRecord> records = {});
void write_structure_csv(std::ostream& out, std::span<const StructureRow> rows, int horizon);

double spearman(std::span<const double> x, std::span<const double> y);

struct RankRow {
    WorldClass world_class = WorldClass::Dense;
    std::string strategy;
    std::int64_t step = 0;
    double mean_nav_loss = 0.0;
    double mean_reward_loss = 0.0;
    double mean_nav_rank = 0.0;
    double sd_nav_rank = 0.0;
    double mean_reward_rank = 0.0;
    double sd_reward_rank = 0.0;
    int n_worlds = 0;
};

/// Average ranks (1 = lowest loss, ties share the mean rank) of strategies across worlds, per checkpoint.
std::vector<RankRow> task_ranks(std::span<const RunRecord> records);
void write_ranks_csv(std::ostream& out, std::span<const RankRow> rows);

/// Exploration with task losses recorded at every task checkpoint (final step when none configured).
std::vector<RunRecord> run_tasks(ExperimentConfig config);

struct SummaryRow {
    WorldClass world_class = WorldClass::Dense;
    std::string strategy;
    double mean_auc = 0.0;
    double se_auc = 0.0;
    double mean_final = 0.0;
    int n_worlds = 0;
};

/// Per-(class, strategy) AUC means over worlds (trials averaged within a world first).
std::vector<SummaryRow> summarize(std::span<const RunRecord> records);
/// Mean embodiment index per class over worlds with both greedy-pig and unembodied-pig runs.
std::map<WorldClass, double> class_embodiment_index(std::span<const RunRecord> records);
void write_report_csv(std::ostream& out, std::span<const SummaryRow> rows, const std::map<WorldClass, double>& ei);

nlohmann::json manifest(const ExperimentConfig& config, const std::string& command);

}  // namespace cmc
