#include "cmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "cmc/tasks.hpp"

namespace cmc {

namespace {

// stream tags for seed derivation
constexpr std::uint64_t kTagWorld = 0x776f726c64;
constexpr std::uint64_t kTagStart = 0x7374617274;
constexpr std::uint64_t kTagTrial = 0x747269616c;
constexpr std::uint64_t kTagReward = 0x726577617264;
constexpr std::uint64_t kTagAccuracy = 0x616363;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sd_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next++;
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::int64_t default_steps(WorldClass wc) {
    switch (wc) {
        case WorldClass::Dense: return 3000;
        case WorldClass::Maze: return 10000;
        case WorldClass::OneTwoThree: return 5000;
    }
    return 1000;
}

std::vector<std::int64_t> default_checkpoints(std::int64_t n_steps) {
    std::set<std::int64_t> points{0, n_steps};
    for (int i = 0;; ++i) {
        const auto p = static_cast<std::int64_t>(std::llround(std::pow(10.0, i / 8.0)));
        if (p > n_steps) break;
        points.insert(p);
    }
    for (int i = 1; i < 100; ++i) points.insert(n_steps * i / 100);
    return {points.begin(), points.end()};
}

std::int64_t ExperimentConfig::steps() const { return n_steps >= 0 ? n_steps : default_steps(world_class); }

std::vector<std::int64_t> ExperimentConfig::checkpoint_schedule() const {
    std::set<std::int64_t> points;
    if (checkpoints.empty()) {
        const auto d = default_checkpoints(steps());
        points.insert(d.begin(), d.end());
    } else {
        points.insert(checkpoints.begin(), checkpoints.end());
    }
    points.insert(task_checkpoints.begin(), task_checkpoints.end());
    return {points.begin(), points.end()};
}

StrategySpec ExperimentConfig::strategy(const std::string& name) const {
    StrategySpec spec = parse_strategy(name);
    spec.vi_steps = vi_steps;
    spec.vi_gamma = gamma;
    spec.q = {q_alpha, q_gamma};
    spec.peig_init = peig_init;
    return spec;
}

void validate(const ExperimentConfig& config) {
    if (config.n_worlds < 1) throw std::invalid_argument("n_worlds must be >= 1");
    if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (config.steps() < 0) throw std::invalid_argument("n_steps must be >= 0");
    if (config.strategies.empty()) throw std::invalid_argument("at least one strategy is required");
    for (const auto& s : config.strategies) (void)config.strategy(s);
    for (auto c : config.checkpoint_schedule())
        if (c < 0 || c > config.steps()) throw std::invalid_argument("checkpoint outside [0, n_steps]");
    if (config.vi_steps < 0) throw std::invalid_argument("vi_steps must be >= 0");
    if (config.gamma < 0.0 || config.gamma > 1.0) throw std::invalid_argument("gamma must lie in [0,1]");
    if (config.q_alpha < 0.0 || config.q_alpha > 1.0) throw std::invalid_argument("q_alpha must lie in [0,1]");
    if (config.q_gamma < 0.0 || config.q_gamma > 1.0) throw std::invalid_argument("q_gamma must lie in [0,1]");
    if (config.accuracy_trials < 1 || config.accuracy_observations < 1)
        throw std::invalid_argument("accuracy experiment needs trials and observations");
    if (config.controllability_horizon < 1) throw std::invalid_argument("controllability horizon must be >= 1");
    if (config.reward_horizon < 1) throw std::invalid_argument("reward horizon must be >= 1");
}

nlohmann::json to_json(const ExperimentConfig& config) {
    return {{"world_class", to_string(config.world_class)},
            {"n_worlds", config.n_worlds},
            {"n_steps", config.steps()},
            {"trials", config.trials},
            {"strategies", config.strategies},
            {"master_seed", config.master_seed},
            {"checkpoints", config.checkpoint_schedule()},
            {"task_checkpoints", config.task_checkpoints},
            {"vi_steps", config.vi_steps},
            {"gamma", config.gamma},
            {"q_alpha", config.q_alpha},
            {"q_gamma", config.q_gamma},
            {"peig_init", config.peig_init == PeigInit::PriorPig ? "prior-pig" : "zero"},
            {"accuracy_trials", config.accuracy_trials},
            {"accuracy_observations", config.accuracy_observations},
            {"controllability_horizon", config.controllability_horizon},
            {"reward_structures", config.reward_structures},
            {"reward_horizon", config.reward_horizon},
            {"step_cap", config.step_cap}};
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(config).dump())));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = splitmix64(master);
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

World make_world(const ExperimentConfig& config, int world_id) {
    Rng rng(derive_seed(config.master_seed,
                        {kTagWorld, static_cast<std::uint64_t>(config.world_class), static_cast<std::uint64_t>(world_id)}));
    return generate_world(config.world_class, rng);
}

std::vector<std::vector<double>> make_reward_structures(const ExperimentConfig& config, int world_id, int n_states) {
    Rng rng(derive_seed(config.master_seed, {kTagReward, static_cast<std::uint64_t>(config.world_class),
                                             static_cast<std::uint64_t>(world_id)}));
    return draw_reward_structures(rng, n_states, config.reward_structures);
}

// ---------------------------------------------------------------------------
// Exploration

RunRecord run_single(const ExperimentConfig& config, const World& world, int world_id, const std::string& strategy,
                     int trial) {
    const auto wc = static_cast<std::uint64_t>(config.world_class);
    const auto wid = static_cast<std::uint64_t>(world_id);
    const auto tr = static_cast<std::uint64_t>(trial);
    const int n = world.kernel.n_states();

    RunRecord rec;
    rec.world_class = config.world_class;
    rec.world_id = world_id;
    rec.strategy = strategy;
    rec.trial = trial;
    rec.seed = derive_seed(config.master_seed, {kTagTrial, wc, wid, fnv1a(strategy), tr});
    {
        Rng start_rng(derive_seed(config.master_seed, {kTagStart, wc, wid, tr}));
        rec.start_state = std::uniform_int_distribution<int>(0, n - 1)(start_rng);
    }
    Rng env(derive_seed(rec.seed, {1}));
    Agent agent(config.strategy(strategy), world.prior, rec.start_state, derive_seed(rec.seed, {2}), &world.kernel);

    const auto checkpoints = config.checkpoint_schedule();
    const std::set<std::int64_t> task_points(config.task_checkpoints.begin(), config.task_checkpoints.end());
    std::vector<std::vector<double>> rewards;
    if (!task_points.empty()) rewards = make_reward_structures(config, world_id, n);

    auto record = [&](std::int64_t step) {
        const auto mi = missing_information(world.kernel, agent.model());
        rec.steps.push_back(step);
        rec.missing_info.push_back(mi.bits);
        rec.l1.push_back(l1_error(world.kernel, agent.model()));
        if (task_points.count(step)) {
            const auto estimate = agent.model().estimate();
            rec.tasks.push_back({step, navigational_loss(world.kernel, estimate, config.step_cap),
                                 reward_loss(world.kernel, estimate, rewards, config.reward_horizon)});
        }
    };

    std::size_t next_checkpoint = 0;
    if (!checkpoints.empty() && checkpoints[0] == 0) {
        record(0);
        ++next_checkpoint;
    }
    const std::int64_t total = config.steps();
    for (std::int64_t t = 1; t <= total; ++t) {
        const auto choice = agent.choose();
        const StateId next = sample_transition(world.kernel, choice.action, choice.state, env);
        agent.observe(choice.action, choice.state, next);
        if (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == t) {
            record(t);
            ++next_checkpoint;
        }
    }
    return rec;
}

std::vector<RunRecord> run_exploration(const ExperimentConfig& config) {
    validate(config);
    std::vector<World> worlds(config.n_worlds);
    parallel_for(worlds.size(), config.workers, [&](std::size_t w) { worlds[w] = make_world(config, static_cast<int>(w)); });

    struct Job {
        int world;
        std::size_t strategy;
        int trial;
    };
    std::vector<Job> jobs;
    for (int w = 0; w < config.n_worlds; ++w)
        for (std::size_t s = 0; s < config.strategies.size(); ++s)
            for (int t = 0; t < config.trials; ++t) jobs.push_back({w, s, t});

    std::vector<RunRecord> results(jobs.size());
    parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
        const auto& job = jobs[i];
        results[i] = run_single(config, worlds[job.world], job.world, config.strategies[job.strategy], job.trial);
    });
    return results;
}

void write_curves_csv(std::ostream& out, std::span<const RunRecord> records) {
    out << "# schema=" << kCurvesSchema << '\n';
    out << "world_class,world_id,strategy,trial,seed,step,missing_info,l1_error\n";
    for (const auto& r : records)
        for (std::size_t i = 0; i < r.steps.size(); ++i)
            out << to_string(r.world_class) << ',' << r.world_id << ',' << r.strategy << ',' << r.trial << ','
                << r.seed << ',' << r.steps[i] << ',' << fmt(r.missing_info[i]) << ',' << fmt(r.l1[i]) << '\n';
}

void write_tasks_csv(std::ostream& out, std::span<const RunRecord> records) {
    out << "# schema=" << kTasksSchema << '\n';
    out << "world_class,world_id,strategy,trial,checkpoint_step,nav_loss,reward_loss\n";
    for (const auto& r : records)
        for (const auto& t : r.tasks)
            out << to_string(r.world_class) << ',' << r.world_id << ',' << r.strategy << ',' << r.trial << ','
                << t.step << ',' << fmt(t.nav_loss) << ',' << fmt(t.reward_loss) << '\n';
}

void write_events_jsonl(std::ostream& out, std::span<const RunRecord> records) {
    for (const auto& r : records) {
        nlohmann::json start{{"event", "start"},     {"world_class", to_string(r.world_class)},
                             {"world_id", r.world_id}, {"strategy", r.strategy},
                             {"trial", r.trial},       {"seed", r.seed},
                             {"start_state", r.start_state + 1}};
        out << start.dump() << '\n';
        nlohmann::json finish{{"event", "finish"},
                              {"world_class", to_string(r.world_class)},
                              {"world_id", r.world_id},
                              {"strategy", r.strategy},
                              {"trial", r.trial},
                              {"steps", r.steps.empty() ? 0 : r.steps.back()},
                              {"final_missing_info", r.missing_info.empty() ? 0.0 : r.missing_info.back()}};
        out << finish.dump() << '\n';
    }
}

std::vector<RunRecord> read_curves_csv(std::istream& in) {
    std::vector<RunRecord> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find(kCurvesSchema) == std::string::npos)
                throw std::runtime_error("curves file has an unsupported schema: " + line);
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw std::runtime_error("malformed curves row: " + line);
        const auto wc = parse_world_class(f[0]);
        const int world = std::stoi(f[1]);
        const int trial = std::stoi(f[3]);
        if (out.empty() || out.back().world_class != wc || out.back().world_id != world || out.back().strategy != f[2] ||
            out.back().trial != trial) {
            RunRecord r;
            r.world_class = wc;
            r.world_id = world;
            r.strategy = f[2];
            r.trial = trial;
            r.seed = std::stoull(f[4]);
            out.push_back(std::move(r));
        }
        out.back().steps.push_back(std::stoll(f[5]));
        out.back().missing_info.push_back(std::stod(f[6]));
        out.back().l1.push_back(std::stod(f[7]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Curve statistics

double auc(std::span<const std::int64_t> steps, std::span<const double> values) {
    if (steps.size() != values.size()) throw std::invalid_argument("curve steps and values differ in length");
    double out = 0.0;
    for (std::size_t i = 1; i < steps.size(); ++i)
        out += static_cast<double>(steps[i] - steps[i - 1]) * (values[i] + values[i - 1]) / 2.0;
    return out;
}

double auc(const RunRecord& record) { return auc(record.steps, record.missing_info); }

double embodiment_index(double greedy_auc, double unembodied_auc) {
    if (unembodied_auc <= 0.0) throw std::invalid_argument("unembodied AUC must be positive");
    return (greedy_auc - unembodied_auc) / unembodied_auc;
}

double embodiment_index(const RunRecord& greedy, const RunRecord& unembodied) {
    if (greedy.steps != unembodied.steps) throw std::invalid_argument("curves use different checkpoint grids");
    return embodiment_index(auc(greedy), auc(unembodied));
}

namespace {

// mean over trials of AUC, keyed by (class, strategy, world)
std::map<std::tuple<WorldClass, std::string, int>, std::pair<double, double>> per_world_auc(
    std::span<const RunRecord> records) {
    std::map<std::tuple<WorldClass, std::string, int>, std::vector<std::pair<double, double>>> raw;
    for (const auto& r : records)
        raw[{r.world_class, r.strategy, r.world_id}].push_back(
            {auc(r), r.missing_info.empty() ? 0.0 : r.missing_info.back()});
    std::map<std::tuple<WorldClass, std::string, int>, std::pair<double, double>> out;
    for (const auto& [key, vals] : raw) {
        double a = 0.0, f = 0.0;
        for (const auto& [x, y] : vals) {
            a += x;
            f += y;
        }
        out[key] = {a / vals.size(), f / vals.size()};
    }
    return out;
}

}  // namespace

std::vector<SummaryRow> summarize(std::span<const RunRecord> records) {
    std::map<std::pair<WorldClass, std::string>, std::pair<std::vector<double>, std::vector<double>>> grouped;
    for (const auto& [key, v] : per_world_auc(records)) {
        auto& g = grouped[{std::get<0>(key), std::get<1>(key)}];
        g.first.push_back(v.first);
        g.second.push_back(v.second);
    }
    std::vector<SummaryRow> out;
    for (const auto& [key, g] : grouped) {
        SummaryRow row;
        row.world_class = key.first;
        row.strategy = key.second;
        row.mean_auc = mean_of(g.first);
        row.se_auc = sd_of(g.first) / std::sqrt(static_cast<double>(g.first.size()));
        row.mean_final = mean_of(g.second);
        row.n_worlds = static_cast<int>(g.first.size());
        out.push_back(std::move(row));
    }
    return out;
}

std::map<WorldClass, double> class_embodiment_index(std::span<const RunRecord> records) {
    const auto aucs = per_world_auc(records);
    std::map<WorldClass, std::vector<double>> indices;
    for (const auto& [key, v] : aucs) {
        if (std::get<1>(key) != "greedy-pig") continue;
        auto it = aucs.find({std::get<0>(key), "unembodied-pig", std::get<2>(key)});
        if (it == aucs.end()) continue;
        indices[std::get<0>(key)].push_back(embodiment_index(v.first, it->second.first));
    }
    std::map<WorldClass, double> out;
    for (const auto& [wc, xs] : indices) out[wc] = mean_of(xs);
    return out;
}

void write_report_csv(std::ostream& out, std::span<const SummaryRow> rows, const std::map<WorldClass, double>& ei) {
    out << "# schema=" << kReportSchema << '\n';
    out << "world_class,strategy,n_worlds,mean_auc,se_auc,mean_final_missing_info,class_embodiment_index\n";
    for (const auto& r : rows) {
        auto it = ei.find(r.world_class);
        out << to_string(r.world_class) << ',' << r.strategy << ',' << r.n_worlds << ',' << fmt(r.mean_auc) << ','
            << fmt(r.se_auc) << ',' << fmt(r.mean_final) << ',' << (it == ei.end() ? "" : fmt(it->second)) << '\n';
    }
}

// ---------------------------------------------------------------------------
// PIG accuracy

std::vector<PigAccuracyRow> run_pig_accuracy(const ExperimentConfig& config) {
    validate(config);
    const int k_max = config.accuracy_observations;
    std::vector<World> worlds(config.n_worlds);
    for (int w = 0; w < config.n_worlds; ++w) worlds[w] = make_world(config, w);
    const int n = worlds[0].kernel.n_states();
    const int m = worlds[0].kernel.n_actions();

    // per world: sums over (row, trial) samples, plus per-row means of pig - ig for clustered errors
    struct WorldStats {
        std::vector<double> pig_sum, pig_sq, ig_sum, ig_sq;
        std::vector<std::vector<double>> row_diff;  // [k][row]
    };
    std::vector<WorldStats> stats(config.n_worlds);
    parallel_for(worlds.size(), config.workers, [&](std::size_t w) {
        const auto& world = worlds[w];
        auto& st = stats[w];
        st.pig_sum.assign(k_max, 0.0);
        st.pig_sq.assign(k_max, 0.0);
        st.ig_sum.assign(k_max, 0.0);
        st.ig_sq.assign(k_max, 0.0);
        st.row_diff.assign(k_max, std::vector<double>(static_cast<std::size_t>(n) * m, 0.0));
        for (int trial = 0; trial < config.accuracy_trials; ++trial) {
            Rng rng(derive_seed(config.master_seed, {kTagAccuracy, static_cast<std::uint64_t>(config.world_class),
                                                     static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(trial)}));
            PosteriorModel model(world.prior);
            for (ActionId a = 0; a < m; ++a)
                for (StateId s = 0; s < n; ++s) {
                    const std::size_t row = static_cast<std::size_t>(a) * n + s;
                    for (int k = 0; k < k_max; ++k) {
                        const double p = pig(model, a, s);
                        const StateId star = sample_transition(world.kernel, a, s, rng);
                        const double ig = information_gain(world.kernel, model, a, s, star);
                        model.update(a, s, star);
                        st.pig_sum[k] += p;
                        st.pig_sq[k] += p * p;
                        st.ig_sum[k] += ig;
                        st.ig_sq[k] += ig * ig;
                        st.row_diff[k][row] += (p - ig) / config.accuracy_trials;
                    }
                }
        }
    });

    std::vector<PigAccuracyRow> out;
    for (int k = 0; k < k_max; ++k) {
        double ps = 0, pq = 0, is = 0, iq = 0;
        std::vector<double> cluster;
        for (const auto& st : stats) {
            ps += st.pig_sum[k];
            pq += st.pig_sq[k];
            is += st.ig_sum[k];
            iq += st.ig_sq[k];
            cluster.insert(cluster.end(), st.row_diff[k].begin(), st.row_diff[k].end());
        }
        const double count = static_cast<double>(config.n_worlds) * n * m * config.accuracy_trials;
        PigAccuracyRow row;
        row.world_class = config.world_class;
        row.k = k;
        row.n = static_cast<std::int64_t>(count);
        row.mean_pig = ps / count;
        row.mean_ig = is / count;
        row.sd_pig = std::sqrt(std::max(0.0, (pq - ps * ps / count) / (count - 1)));
        row.sd_ig = std::sqrt(std::max(0.0, (iq - is * is / count) / (count - 1)));
        row.se_pig = row.sd_pig / std::sqrt(count);
        row.se_ig = row.sd_ig / std::sqrt(count);
        row.se_diff = sd_of(cluster) / std::sqrt(static_cast<double>(cluster.size()));
        out.push_back(row);
    }
    return out;
}

void write_pig_accuracy_csv(std::ostream& out, std::span<const PigAccuracyRow> rows) {
    out << "# schema=" << kPigAccuracySchema << '\n';
    out << "world_class,k,mean_pig,mean_ig,sd_pig,sd_ig,se_pig,se_ig,se_diff,n\n";
    for (const auto& r : rows)
        out << to_string(r.world_class) << ',' << r.k << ',' << fmt(r.mean_pig) << ',' << fmt(r.mean_ig) << ','
            << fmt(r.sd_pig) << ',' << fmt(r.sd_ig) << ',' << fmt(r.se_pig) << ',' << fmt(r.se_ig) << ','
            << fmt(r.se_diff) << ',' << r.n << '\n';
}

// ---------------------------------------------------------------------------
// Structure

std::vector<StructureRow> run_structure_analysis(const ExperimentConfig& config, std::span<const RunRecord> records) {
    validate(config);
    std::map<std::pair<int, std::string>, std::vector<double>> aucs;
    for (const auto& r : records)
        if (r.world_class == config.world_class) aucs[{r.world_id, r.strategy}].push_back(auc(r));

    std::vector<StructureRow> out(config.n_worlds);
    parallel_for(out.size(), config.workers, [&](std::size_t w) {
        const auto world = make_world(config, static_cast<int>(w));
        auto& row = out[w];
        row.world_class = config.world_class;
        row.world_id = static_cast<int>(w);
        row.structure_index = structure_index(equilibrium_distribution(world.kernel));
        for (int t = 1; t <= config.controllability_horizon; ++t)
            row.controllability.push_back(mean_controllability(world.kernel, t));
        auto g = aucs.find({row.world_id, "greedy-pig"});
        auto u = aucs.find({row.world_id, "unembodied-pig"});
        if (g != aucs.end() && u != aucs.end()) row.embodiment_index = embodiment_index(mean_of(g->second), mean_of(u->second));
    });
    return out;
}

void write_structure_csv(std::ostream& out, std::span<const StructureRow> rows, int horizon) {
    out << "# schema=" << kStructureSchema << '\n';
    out << "world_class,world_id,structure_index,embodiment_index";
    for (int t = 1; t <= horizon; ++t) out << ",controllability_t" << t;
    out << '\n';
    for (const auto& r : rows) {
        out << to_string(r.world_class) << ',' << r.world_id << ',' << fmt(r.structure_index) << ','
            << (r.embodiment_index ? fmt(*r.embodiment_index) : std::string());
        for (double c : r.controllability) out << ',' << fmt(c);
        out << '\n';
    }
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal-length samples");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = mean_of(rx), my = mean_of(ry);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Tasks

std::vector<RankRow> task_ranks(std::span<const RunRecord> records) {
    // (class, step, world, strategy) -> mean losses over trials
    std::map<std::tuple<WorldClass, std::int64_t, int>, std::map<std::string, std::pair<double, int>>> nav, rew;
    std::vector<std::string> order;
    for (const auto& r : records) {
        if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
        for (const auto& t : r.tasks) {
            auto& n = nav[{r.world_class, t.step, r.world_id}][r.strategy];
            n.first += t.nav_loss;
            ++n.second;
            auto& q = rew[{r.world_class, t.step, r.world_id}][r.strategy];
            q.first += t.reward_loss;
            ++q.second;
        }
    }
    struct Acc {
        std::vector<double> nav_rank, rew_rank, nav_loss, rew_loss;
    };
    std::map<std::tuple<WorldClass, std::int64_t, std::string>, Acc> acc;
    for (const auto& [key, by_strategy] : nav) {
        const auto& rew_by = rew.at(key);
        std::vector<std::string> names;
        std::vector<double> nl, rl;
        for (const auto& [name, v] : by_strategy) {
            names.push_back(name);
            nl.push_back(v.first / v.second);
            rl.push_back(rew_by.at(name).first / rew_by.at(name).second);
        }
        const auto nr = average_ranks(nl);
        const auto rr = average_ranks(rl);
        for (std::size_t i = 0; i < names.size(); ++i) {
            auto& a = acc[{std::get<0>(key), std::get<1>(key), names[i]}];
            a.nav_rank.push_back(nr[i]);
            a.rew_rank.push_back(rr[i]);
            a.nav_loss.push_back(nl[i]);
            a.rew_loss.push_back(rl[i]);
        }
    }
    std::vector<RankRow> out;
    for (const auto& [key, a] : acc) {
        RankRow row;
        row.world_class = std::get<0>(key);
        row.step = std::get<1>(key);
        row.strategy = std::get<2>(key);
        row.mean_nav_loss = mean_of(a.nav_loss);
        row.mean_reward_loss = mean_of(a.rew_loss);
        row.mean_nav_rank = mean_of(a.nav_rank);
        row.sd_nav_rank = sd_of(a.nav_rank);
        row.mean_reward_rank = mean_of(a.rew_rank);
        row.sd_reward_rank = sd_of(a.rew_rank);
        row.n_worlds = static_cast<int>(a.nav_rank.size());
        out.push_back(std::move(row));
    }
    // stable presentation: configured strategy order within each (class, step)
    std::stable_sort(out.begin(), out.end(), [&](const RankRow& x, const RankRow& y) {
        if (x.world_class != y.world_class) return x.world_class < y.world_class;
        if (x.step != y.step) return x.step < y.step;
        return std::find(order.begin(), order.end(), x.strategy) < std::find(order.begin(), order.end(), y.strategy);
    });
    return out;
}

void write_ranks_csv(std::ostream& out, std::span<const RankRow> rows) {
    out << "# schema=" << kRanksSchema << '\n';
    out << "world_class,strategy,checkpoint_step,n_worlds,mean_nav_loss,mean_reward_loss,mean_nav_rank,sd_nav_rank,"
           "mean_reward_rank,sd_reward_rank\n";
    for (const auto& r : rows)
        out << to_string(r.world_class) << ',' << r.strategy << ',' << r.step << ',' << r.n_worlds << ','
            << fmt(r.mean_nav_loss) << ',' << fmt(r.mean_reward_loss) << ',' << fmt(r.mean_nav_rank) << ','
            << fmt(r.sd_nav_rank) << ',' << fmt(r.mean_reward_rank) << ',' << fmt(r.sd_reward_rank) << '\n';
}

std::vector<RunRecord> run_tasks(ExperimentConfig config) {
    if (config.task_checkpoints.empty()) config.task_checkpoints = {config.steps()};
    return run_exploration(config);
}

nlohmann::json manifest(const ExperimentConfig& config, const std::string& command) {
    return {{"tool", "cmc-explore"},
            {"version", kVersion},
            {"command", command},
            {"config", to_json(config)},
            {"config_hash", config_hash(config)},
            {"schemas",
             {{"curves", kCurvesSchema},
              {"pig_accuracy", kPigAccuracySchema},
              {"structure", kStructureSchema},
              {"tasks", kTasksSchema},
              {"task_ranks", kRanksSchema},
              {"report", kReportSchema}}},
            {"state_ids", "1-based in events and world bundles"}};
}

}  // namespace cmc
