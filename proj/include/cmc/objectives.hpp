#pragma once

#include <span>
#include <string>
#include <vector>

#include "cmc/inference.hpp"
#include "cmc/kernel.hpp"

namespace cmc {

/// D_KL(p || q) in bits; p = 0 terms vanish, p > 0 with q = 0 gives +inf.
double kl_bits(std::span<const double> p, std::span<const double> q);

/// Per-action, per-state utility values, indexed [a][s].
class UtilityTable {
public:
    UtilityTable() = default;
    UtilityTable(int n_actions, int n_states, double fill = 0.0)
        : n_actions_(n_actions), n_states_(n_states),
          values_(static_cast<std::size_t>(n_actions) * n_states, fill) {}

    int n_actions() const noexcept { return n_actions_; }
    int n_states() const noexcept { return n_states_; }
    double operator()(ActionId a, StateId s) const { return values_[static_cast<std::size_t>(a) * n_states_ + s]; }
    double& operator()(ActionId a, StateId s) { return values_[static_cast<std::size_t>(a) * n_states_ + s]; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool operator==(const UtilityTable&) const = default;

private:
    int n_actions_ = 0;
    int n_states_ = 0;
    std::vector<double> values_;
};

enum class Utility { PIG, PEIG, PMC, PLC };

std::string to_string(Utility u);
Utility parse_utility(const std::string& name);

/// Result of missing_information: total bits and, when infinite, the first offending row.
struct MissingInformation {
    double bits = 0.0;
    ActionId bad_action = -1;
    StateId bad_state = -1;
    bool finite() const { return bad_action < 0; }
};

MissingInformation missing_information(const TransitionKernel& truth, const PosteriorModel& model);
double missing_information(const TransitionKernel& truth, const TransitionKernel& estimate);

/// I_M before minus after updating row (a, s) with s_star. Negative values are allowed.
double information_gain(const TransitionKernel& truth, const PosteriorModel& model, ActionId a, StateId s,
                        StateId s_star);

/// Predicted information gain: sum over s* of p(s*) KL(row updated with s* || current row).
/// Closed form for Dirichlet rows.
double pig(const PosteriorModel& model, ActionId a, StateId s);
/// PIG summed term by term from hypothetical_row (used to check the closed form).
double pig_reference(const PosteriorModel& model, ActionId a, StateId s);

double pmc(const PosteriorModel& model, ActionId a, StateId s);
double plc(const PosteriorModel& model, ActionId a, StateId s);

/// Sum over rows of (1/N) * L1 distance between truth and the internal model.
double l1_error(const TransitionKernel& truth, const PosteriorModel& model);

/// Utility of one row for PIG / PMC / PLC (PEIG is stateful; see PeigState).
double row_utility(Utility u, const PosteriorModel& model, ActionId a, StateId s);
UtilityTable utility_table(Utility u, const PosteriorModel& model);

enum class PeigInit { PriorPig, Zero };

/// Last posterior change of every row, D_KL(after || before) in bits.
class PeigState {
public:
    PeigState(const PosteriorModel& prior_model, PeigInit init = PeigInit::PriorPig);

    const UtilityTable& table() const noexcept { return table_; }
    double operator()(ActionId a, StateId s) const { return table_(a, s); }
    void set(ActionId a, StateId s, double value) { table_(a, s) = value; }

private:
    UtilityTable table_;
};

/// Stores D_KL(after row || before row) for (a, s) and returns the stored value.
double peig_observe(PeigState& state, const PosteriorModel& before, const PosteriorModel& after, ActionId a,
                    StateId s);
double peig_observe(PeigState& state, std::span<const double> before_row, std::span<const double> after_row,
                    ActionId a, StateId s);

}  // namespace cmc
