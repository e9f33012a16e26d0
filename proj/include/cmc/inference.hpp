#pragma once

#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cmc/kernel.hpp"
#include "cmc/worlds.hpp"

namespace cmc {

/// Dirichlet sufficient statistics; counts[row][k] is aligned with support[row][k].
struct DirichletCounts {
    double alpha = 1.0;
    std::vector<std::vector<StateId>> support;
    std::vector<std::vector<int>> counts;
    bool operator==(const DirichletCounts&) const = default;
};

/// Discrete 1-2-3 statistics: distinct observed targets per row (kept sorted).
struct DiscreteOneTwoThree {
    std::vector<std::vector<StateId>> observed;
    bool operator==(const DiscreteOneTwoThree&) const = default;
};

/**
 * Agent-side belief over a kernel. Rows are independent, so every query only
 * touches the sufficient statistics of a single (a, s) row.
 */
class PosteriorModel {
public:
    explicit PosteriorModel(const PriorSpec& prior);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    /// Total observations K of row (a, s).
    int observations(ActionId a, StateId s) const { return totals_[row_index(a, s)]; }

    std::vector<double> predict(ActionId a, StateId s) const;
    void predict_into(ActionId a, StateId s, std::span<double> out) const;

    /// Throws std::invalid_argument for a next state outside the row's admissible set.
    void update(ActionId a, StateId s, StateId next);

    /// predict() of a copy updated with (a, s) -> s_star; this model is unchanged.
    std::vector<double> hypothetical_row(ActionId a, StateId s, StateId s_star) const;

    /// Draws the row Theta_{a,s,:} from the exact posterior.
    std::vector<double> sample_row(ActionId a, StateId s, Rng& rng) const;

    /// Full internal model as a kernel.
    TransitionKernel estimate() const;

    const std::variant<DirichletCounts, DiscreteOneTwoThree>& stats() const noexcept { return stats_; }
    bool is_discrete() const noexcept { return std::holds_alternative<DiscreteOneTwoThree>(stats_); }

    nlohmann::json snapshot() const;
    static PosteriorModel from_snapshot(const nlohmann::json& j);

    bool operator==(const PosteriorModel&) const = default;

private:
    PosteriorModel() = default;
    std::size_t row_index(ActionId a, StateId s) const {
        return static_cast<std::size_t>(a) * n_states_ + s;
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::variant<DirichletCounts, DiscreteOneTwoThree> stats_;
    std::vector<int> totals_;
};

/**
 * Posterior predictive row of a 1-2-3 action with `n_targets` targets given the
 * set of distinct observed targets (state 0 is the absorbing-biased state).
 */
void one_two_three_row(int n_states, int n_targets, std::span<const StateId> observed, std::span<double> out);

/// Exact Bayes by enumerating every admissible target set of the 1-2-3 prior.
/// Throws std::invalid_argument when no admissible set explains the history.
std::vector<double> enumeration_oracle(const OneTwoThree& prior, ActionId a, std::span<const StateId> history);

double binomial(int n, int k);

}  // namespace cmc
