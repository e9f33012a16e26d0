#include "cmc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace cmc {

namespace {

// States that can reach `target` with positive probability using any action.
std::vector<char> can_reach(const SparseRows& rows, StateId target) {
    const int n = rows.n_states;
    std::vector<std::vector<StateId>> back(n);
    for (ActionId a = 0; a < rows.n_actions; ++a)
        for (StateId s = 0; s < n; ++s)
            for (const auto& [next, p] : rows.row(a, s)) back[next].push_back(s);
    std::vector<char> seen(n, 0);
    std::vector<StateId> stack{target};
    seen[target] = 1;
    while (!stack.empty()) {
        const StateId s = stack.back();
        stack.pop_back();
        for (StateId prev : back[s])
            if (!seen[prev]) {
                seen[prev] = 1;
                stack.push_back(prev);
            }
    }
    return seen;
}

int lowest_argmin(std::span<const double> values) {
    double best = *std::min_element(values.begin(), values.end());
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] <= best + tol) return static_cast<int>(i);
    return 0;
}

int lowest_argmax(std::span<const double> values) {
    double best = *std::max_element(values.begin(), values.end());
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= best - tol) return static_cast<int>(i);
    return 0;
}

}  // namespace

NavigationPolicy navigation_policy(const TransitionKernel& kernel, StateId target, double cap, double tol) {
    const int n = kernel.n_states();
    const int m = kernel.n_actions();
    if (target < 0 || target >= n) throw std::out_of_range("target out of range");
    const auto rows = sparse_rows(kernel);
    const auto reachable = can_reach(rows, target);

    NavigationPolicy out;
    out.target = target;
    out.expected_steps.assign(n, 0.0);
    out.unreachable.assign(n, 0);
    out.action.assign(n, 0);
    for (StateId s = 0; s < n; ++s)
        if (!reachable[s]) {
            out.expected_steps[s] = cap;
            out.unreachable[s] = 1;
        }

    auto& v = out.expected_steps;
    std::vector<double> q(m);
    // Gauss-Seidel sweeps; values rise monotonically from zero toward the optimum (or the cap)
    for (long sweep = 0; sweep < 10'000'000; ++sweep) {
        double change = 0.0;
        for (StateId s = 0; s < n; ++s) {
            if (s == target || !reachable[s]) continue;
            for (ActionId a = 0; a < m; ++a) {
                double acc = 1.0;
                for (const auto& [next, p] : rows.row(a, s)) acc += p * v[next];
                q[a] = acc;
            }
            const double updated = std::min(cap, *std::min_element(q.begin(), q.end()));
            change = std::max(change, std::abs(updated - v[s]));
            v[s] = updated;
        }
        if (change < tol) break;
    }
    for (StateId s = 0; s < n; ++s) {
        if (s == target) continue;
        for (ActionId a = 0; a < m; ++a) {
            double acc = 1.0;
            for (const auto& [next, p] : rows.row(a, s)) acc += p * v[next];
            q[a] = acc;
        }
        out.action[s] = lowest_argmin(q);
        if (v[s] >= cap) out.unreachable[s] = 1;
    }
    return out;
}

std::vector<double> hitting_times(const TransitionKernel& kernel, std::span<const ActionId> policy, StateId target,
                                  double cap) {
    const int n = kernel.n_states();
    if (static_cast<int>(policy.size()) != n) throw std::invalid_argument("policy length does not match states");
    // policy graph (target absorbing)
    std::vector<std::vector<StateId>> fwd(n), back(n);
    for (StateId s = 0; s < n; ++s) {
        if (s == target) continue;
        auto row = kernel.row(policy[s], s);
        for (StateId t = 0; t < n; ++t)
            if (row[t] > 0.0) {
                fwd[s].push_back(t);
                back[t].push_back(s);
            }
    }
    auto flood = [n](const std::vector<std::vector<StateId>>& adj, std::vector<StateId> seeds) {
        std::vector<char> seen(n, 0);
        for (StateId s : seeds) seen[s] = 1;
        while (!seeds.empty()) {
            const StateId s = seeds.back();
            seeds.pop_back();
            for (StateId t : adj[s])
                if (!seen[t]) {
                    seen[t] = 1;
                    seeds.push_back(t);
                }
        }
        return seen;
    };
    // hits target with positive probability
    const auto hits = flood(back, {target});
    // a state is bad if it can wander into a state that never hits the target
    std::vector<StateId> dead;
    for (StateId s = 0; s < n; ++s)
        if (!hits[s]) dead.push_back(s);
    std::vector<char> bad(n, 0);
    if (!dead.empty()) {
        bad = flood(back, dead);
        bad[target] = 0;
    }

    std::vector<int> index(n, -1);
    std::vector<StateId> live;
    for (StateId s = 0; s < n; ++s)
        if (s != target && !bad[s]) {
            index[s] = static_cast<int>(live.size());
            live.push_back(s);
        }
    std::vector<double> out(n, cap);
    out[target] = 0.0;
    if (live.empty()) return out;

    const int k = static_cast<int>(live.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(k);
    for (int i = 0; i < k; ++i) {
        auto row = kernel.row(policy[live[i]], live[i]);
        for (StateId t = 0; t < n; ++t)
            if (index[t] >= 0) system(i, index[t]) -= row[t];
    }
    const Eigen::VectorXd h = system.partialPivLu().solve(rhs);
    // leaks near the denormal range make the system numerically singular; those
    // states take astronomically long, so anything outside [1, cap] is capped
    for (int i = 0; i < k; ++i) out[live[i]] = std::isfinite(h[i]) && h[i] >= 1.0 - 1e-9 ? std::min(cap, h[i]) : cap;
    return out;
}

double realized_path_length(const TransitionKernel& truth, std::span<const ActionId> policy, StateId start,
                            StateId target, double cap) {
    return hitting_times(truth, policy, target, cap)[start];
}

double navigational_loss(const TransitionKernel& truth, const TransitionKernel& model, double cap) {
    const int n = truth.n_states();
    double total = 0.0;
    for (StateId target = 0; target < n; ++target) {
        const auto subjective = navigation_policy(model, target, cap);
        const auto objective = navigation_policy(truth, target, cap);
        const auto sub_steps = hitting_times(truth, subjective.action, target, cap);
        const auto obj_steps = hitting_times(truth, objective.action, target, cap);
        for (StateId s = 0; s < n; ++s) total += sub_steps[s] - obj_steps[s];
    }
    return total / (static_cast<double>(n) * n);
}

RewardPolicy reward_policy(const TransitionKernel& kernel, std::span<const double> rewards, int horizon) {
    const int n = kernel.n_states();
    const int m = kernel.n_actions();
    if (static_cast<int>(rewards.size()) != n) throw std::invalid_argument("reward vector length mismatch");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    const auto rows = sparse_rows(kernel);
    RewardPolicy out;
    out.horizon = horizon;
    out.n_states = n;
    out.action.assign(static_cast<std::size_t>(horizon) * n, 0);
    std::vector<double> v(n, 0.0), next_v(n), q(m);
    for (int t = horizon - 1; t >= 0; --t) {
        for (StateId s = 0; s < n; ++s) {
            for (ActionId a = 0; a < m; ++a) {
                double acc = 0.0;
                for (const auto& [next, p] : rows.row(a, s)) acc += p * (rewards[next] + v[next]);
                q[a] = acc;
            }
            const int best = lowest_argmax(q);
            out.action[static_cast<std::size_t>(t) * n + s] = best;
            next_v[s] = q[best];
        }
        v.swap(next_v);
    }
    out.value = v;
    return out;
}

std::vector<double> realized_rewards(const TransitionKernel& truth, const RewardPolicy& policy,
                                     std::span<const double> rewards) {
    const int n = truth.n_states();
    if (policy.n_states != n) throw std::invalid_argument("policy does not match the kernel");
    std::vector<double> v(n, 0.0), next_v(n);
    for (int t = policy.horizon - 1; t >= 0; --t) {
        for (StateId s = 0; s < n; ++s) {
            auto row = truth.row(policy(t, s), s);
            double acc = 0.0;
            for (StateId next = 0; next < n; ++next)
                if (row[next] > 0.0) acc += row[next] * (rewards[next] + v[next]);
            next_v[s] = acc;
        }
        v.swap(next_v);
    }
    return v;
}

double realized_reward(const TransitionKernel& truth, const RewardPolicy& policy, std::span<const double> rewards,
                       StateId start) {
    return realized_rewards(truth, policy, rewards)[start];
}

double reward_loss(const TransitionKernel& truth, const TransitionKernel& model,
                   std::span<const std::vector<double>> reward_structures, int horizon) {
    if (reward_structures.empty()) return 0.0;
    const int n = truth.n_states();
    double total = 0.0;
    for (const auto& rewards : reward_structures) {
        const auto objective = reward_policy(truth, rewards, horizon);
        const auto subjective = reward_policy(model, rewards, horizon);
        const auto realized = realized_rewards(truth, subjective, rewards);
        for (StateId s = 0; s < n; ++s) total += objective.value[s] - realized[s];
    }
    return total / (static_cast<double>(n) * reward_structures.size());
}

std::vector<std::vector<double>> draw_reward_structures(Rng& rng, int n_states, int count) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> out(count, std::vector<double>(n_states));
    for (auto& r : out)
        for (auto& x : r) x = normal(rng);
    return out;
}

}  // namespace cmc
