#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cmc {

using Rng = std::mt19937_64;
using StateId = int;
using ActionId = int;

/// Row-stochasticity tolerance shared by every distribution check.
inline constexpr double kStochasticTol = 1e-9;

/// Raised by validate(); carries the first offending (action, state) row.
class InvalidKernel : public std::runtime_error {
public:
    InvalidKernel(ActionId action, StateId state, double row_sum, const std::string& what)
        : std::runtime_error(what), action_(action), state_(state), row_sum_(row_sum) {}

    ActionId action() const noexcept { return action_; }
    StateId state() const noexcept { return state_; }
    double row_sum() const noexcept { return row_sum_; }

private:
    ActionId action_;
    StateId state_;
    double row_sum_;
};

/**
 * Controllable Markov chain kernel: probs(a, s, s') is the probability of
 * moving from s to s' under action a. Stored dense, row-major over
 * [action][state][next state].
 */
class TransitionKernel {
public:
    TransitionKernel() = default;
    TransitionKernel(int n_states, int n_actions);
    TransitionKernel(int n_states, int n_actions, std::vector<double> probs);

    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    double operator()(ActionId a, StateId s, StateId next) const {
        return probs_[index(a, s, next)];
    }
    double& operator()(ActionId a, StateId s, StateId next) { return probs_[index(a, s, next)]; }

    std::span<const double> row(ActionId a, StateId s) const {
        return {probs_.data() + index(a, s, 0), static_cast<std::size_t>(n_states_)};
    }
    std::span<double> row(ActionId a, StateId s) {
        return {probs_.data() + index(a, s, 0), static_cast<std::size_t>(n_states_)};
    }
    void set_row(ActionId a, StateId s, std::span<const double> values);

    const std::vector<double>& data() const noexcept { return probs_; }

    bool operator==(const TransitionKernel&) const = default;

private:
    std::size_t index(ActionId a, StateId s, StateId next) const {
        return (static_cast<std::size_t>(a) * n_states_ + s) * n_states_ + next;
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> probs_;
};

/// Probability vector over states.
using StateDistribution = std::vector<double>;

/// Sparse view of a kernel: for row a*N+s, the (next, prob) pairs with prob > 0.
struct SparseRows {
    int n_states = 0;
    int n_actions = 0;
    std::vector<std::vector<std::pair<StateId, double>>> rows;

    const std::vector<std::pair<StateId, double>>& row(ActionId a, StateId s) const {
        return rows[static_cast<std::size_t>(a) * n_states + s];
    }
    std::vector<std::pair<StateId, double>>& row(ActionId a, StateId s) {
        return rows[static_cast<std::size_t>(a) * n_states + s];
    }
};

SparseRows sparse_rows(const TransitionKernel& kernel);
std::vector<std::pair<StateId, double>> sparse_row(std::span<const double> row);

/// Throws InvalidKernel for the first row with an entry outside [0,1] or a sum off 1.
void validate(const TransitionKernel& kernel);

/// Throws std::invalid_argument unless `dist` is a distribution within tolerance.
void validate_distribution(std::span<const double> dist);

StateId sample_transition(const TransitionKernel& kernel, ActionId a, StateId s, Rng& rng);

/// Draws an index from an arbitrary probability vector (need not be normalized exactly).
int sample_categorical(std::span<const double> probs, Rng& rng);

/// Action-averaged chain P(s'|s) = mean over actions of the kernel rows, N x N row-major.
std::vector<double> averaged_chain(const TransitionKernel& kernel);

/**
 * Stationary distribution of the action-averaged chain by power iteration on
 * the lazy chain (I + P) / 2, started from uniform. Throws std::runtime_error
 * when ||psi P - psi||_1 does not reach `tol` within `max_iter` sweeps.
 */
StateDistribution equilibrium_distribution(const TransitionKernel& kernel, double tol = 1e-8,
                                           int max_iter = 100000);

double entropy_bits(std::span<const double> dist);

/// (H(U) - H(psi)) / H(U). Throws std::invalid_argument for a single state.
double structure_index(std::span<const double> psi);

/// MI[A0, S_t | s0] in bits with a uniformly random first and subsequent actions.
double controllability(const TransitionKernel& kernel, StateId s0, int t);

/// controllability averaged over every start state.
double mean_controllability(const TransitionKernel& kernel, int t);

/// Strong connectivity of the union graph (edge s->s' if any action reaches s').
bool is_ergodic(const TransitionKernel& kernel);

void write_kernel(std::ostream& out, const TransitionKernel& kernel);
TransitionKernel read_kernel(std::istream& in);

}  // namespace cmc
