#pragma once

#include <span>
#include <vector>

#include "cmc/kernel.hpp"

namespace cmc {

/// Expected-steps ceiling for targets that cannot be reached (almost surely).
inline constexpr double kDefaultStepCap = 1e4;

struct NavigationPolicy {
    StateId target = 0;
    std::vector<ActionId> action;         ///< stationary, one action per state
    std::vector<double> expected_steps;   ///< value under the kernel the policy was derived from
    std::vector<char> unreachable;        ///< 1 where the cap was hit
};

/// Stochastic shortest path by value iteration: unit step cost, target absorbing at cost 0.
NavigationPolicy navigation_policy(const TransitionKernel& kernel, StateId target, double cap = kDefaultStepCap,
                                   double tol = 1e-9);

/// Expected hitting times of `target` for a fixed stationary policy, by a linear solve; capped.
std::vector<double> hitting_times(const TransitionKernel& kernel, std::span<const ActionId> policy, StateId target,
                                  double cap = kDefaultStepCap);

double realized_path_length(const TransitionKernel& truth, std::span<const ActionId> policy, StateId start,
                            StateId target, double cap = kDefaultStepCap);

/// Mean over (start, target) of realized steps of the model-derived policy minus the truth-derived policy.
double navigational_loss(const TransitionKernel& truth, const TransitionKernel& model, double cap = kDefaultStepCap);

/// Time-indexed policy: action[t * N + s]. Reward is collected on the state entered at each step.
struct RewardPolicy {
    int horizon = 0;
    int n_states = 0;
    std::vector<ActionId> action;
    std::vector<double> value;  ///< optimal expected return from each start under the planning kernel

    ActionId operator()(int t, StateId s) const { return action[static_cast<std::size_t>(t) * n_states + s]; }
};

RewardPolicy reward_policy(const TransitionKernel& kernel, std::span<const double> rewards, int horizon = 100);

/// Expected return of a fixed time-indexed policy under `truth`, for every start state.
std::vector<double> realized_rewards(const TransitionKernel& truth, const RewardPolicy& policy,
                                     std::span<const double> rewards);
double realized_reward(const TransitionKernel& truth, const RewardPolicy& policy, std::span<const double> rewards,
                       StateId start);

/// Objective minus subjective realized return, averaged over starts and reward structures.
double reward_loss(const TransitionKernel& truth, const TransitionKernel& model,
                   std::span<const std::vector<double>> reward_structures, int horizon = 100);

/// `count` reward vectors with i.i.d. standard-normal entries.
std::vector<std::vector<double>> draw_reward_structures(Rng& rng, int n_states, int count = 10);

}  // namespace cmc
