#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmc/inference.hpp"
#include "cmc/kernel.hpp"
#include "cmc/objectives.hpp"
#include "cmc/worlds.hpp"

namespace cmc {

enum class Coordination { Random, LTA, CounterBased, Greedy, VI, VIPlus, QLearn, Unembodied };

struct QParams {
    double alpha = 0.2;
    double gamma = 0.95;
};

struct StrategySpec {
    Coordination coordination = Coordination::Random;
    Utility utility = Utility::PIG;
    int vi_steps = 10;
    double vi_gamma = 1.0;
    QParams q;
    PeigInit peig_init = PeigInit::PriorPig;

    /// Stable CLI name, e.g. "vi-pig", "random", "lta".
    std::string name() const;
    bool uses_utility() const;
    bool needs_truth() const {
        return coordination == Coordination::VIPlus || coordination == Coordination::Unembodied;
    }
};

/// Parses "random", "lta", "cb" or "<greedy|vi|viplus|q|unembodied>-<pig|peig|pmc|plc>".
StrategySpec parse_strategy(const std::string& name);

/// Index of the maximum; values within a relative 1e-12 of the best tie and are broken uniformly.
int argmax_random_tie(std::span<const double> values, Rng& rng);
int argmin_random_tie(std::span<const double> values, Rng& rng);

/**
 * Finite-horizon backups Q_{t-1}(a,s) = U(a,s) + gamma * sum_s' P(s'|a,s) max_a' Q_t(a',s'),
 * starting from Q_0 = U. Returns Q after `steps` backups.
 */
UtilityTable value_iterate(const UtilityTable& utility, const SparseRows& rows, int steps, double gamma);

/// One tabular Q-learning update of q(a, s).
void q_update(UtilityTable& q, double utility_observed, ActionId a, StateId s, StateId next, const QParams& params);

struct Choice {
    ActionId action = 0;
    StateId state = 0;  ///< state the action is executed from (differs from current only when unembodied)
};

/**
 * Exploring agent: posterior model plus the per-strategy bookkeeping needed by
 * every chooser. The ground-truth kernel is only consulted by VI+ (propagation)
 * and the unembodied control (teleporting).
 */
class Agent {
public:
    Agent(StrategySpec spec, const PriorSpec& prior, StateId start, std::uint64_t seed,
          const TransitionKernel* truth = nullptr);

    Choice choose();
    void observe(ActionId a, StateId s, StateId next);

    ActionId choose_random();
    ActionId choose_lta();
    ActionId choose_cb();
    ActionId choose_greedy();
    ActionId choose_vi();
    ActionId choose_vi_plus();
    ActionId choose_q();
    Choice choose_unembodied();

    const StrategySpec& spec() const noexcept { return spec_; }
    StateId current_state() const noexcept { return current_; }
    const PosteriorModel& model() const noexcept { return model_; }
    /// Current utility table (PEIG: last posterior change per row).
    const UtilityTable& utilities() const noexcept { return utility_; }
    const UtilityTable& q_table() const noexcept { return q_; }
    const SparseRows& model_rows() const noexcept { return model_rows_; }
    int action_count(ActionId a, StateId s) const {
        return action_counts_[static_cast<std::size_t>(a) * model_.n_states() + s];
    }
    int visit_count(StateId s) const { return visit_counts_[s]; }
    std::int64_t steps_taken() const noexcept { return steps_; }

    /// Forces the tie-breaking stream; used by tests.
    Rng& rng() noexcept { return rng_; }

private:
    StrategySpec spec_;
    PosteriorModel model_;
    const TransitionKernel* truth_;
    std::optional<SparseRows> truth_rows_;
    StateId current_;
    Rng rng_;
    std::int64_t steps_ = 0;

    SparseRows model_rows_;
    UtilityTable utility_;
    std::optional<PeigState> peig_;
    UtilityTable q_;
    std::vector<int> action_counts_;
    std::vector<int> visit_counts_;
    std::vector<double> scratch_row_;
};

}  // namespace cmc
