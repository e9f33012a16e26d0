#include "cmc/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmc {

std::string StrategySpec::name() const {
    switch (coordination) {
        case Coordination::Random: return "random";
        case Coordination::LTA: return "lta";
        case Coordination::CounterBased: return "cb";
        case Coordination::Greedy: return "greedy-" + to_string(utility);
        case Coordination::VI: return "vi-" + to_string(utility);
        case Coordination::VIPlus: return "viplus-" + to_string(utility);
        case Coordination::QLearn: return "q-" + to_string(utility);
        case Coordination::Unembodied: return "unembodied-" + to_string(utility);
    }
    return "?";
}

bool StrategySpec::uses_utility() const {
    return coordination != Coordination::Random && coordination != Coordination::LTA &&
           coordination != Coordination::CounterBased;
}

StrategySpec parse_strategy(const std::string& name) {
    StrategySpec spec;
    if (name == "random") return spec;
    if (name == "lta") {
        spec.coordination = Coordination::LTA;
        return spec;
    }
    if (name == "cb") {
        spec.coordination = Coordination::CounterBased;
        return spec;
    }
    const auto dash = name.find('-');
    if (dash == std::string::npos) throw std::invalid_argument("unknown strategy '" + name + "'");
    const auto coord = name.substr(0, dash);
    if (coord == "greedy") spec.coordination = Coordination::Greedy;
    else if (coord == "vi") spec.coordination = Coordination::VI;
    else if (coord == "viplus") spec.coordination = Coordination::VIPlus;
    else if (coord == "q") spec.coordination = Coordination::QLearn;
    else if (coord == "unembodied") spec.coordination = Coordination::Unembodied;
    else throw std::invalid_argument("unknown strategy '" + name + "'");
    spec.utility = parse_utility(name.substr(dash + 1));
    return spec;
}

namespace {

template <typename Better>
int pick_with_ties(std::span<const double> values, Rng& rng, Better better) {
    if (values.empty()) throw std::invalid_argument("cannot choose from an empty set");
    double best = values[0];
    for (double v : values)
        if (better(v, best)) best = v;
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    int ties = 0;
    for (double v : values)
        if (std::abs(v - best) <= tol) ++ties;
    int pick = ties == 1 ? 0 : std::uniform_int_distribution<int>(0, ties - 1)(rng);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (std::abs(values[i] - best) <= tol && pick-- == 0) return static_cast<int>(i);
    return 0;
}

}  // namespace

int argmax_random_tie(std::span<const double> values, Rng& rng) {
    return pick_with_ties(values, rng, [](double a, double b) { return a > b; });
}

int argmin_random_tie(std::span<const double> values, Rng& rng) {
    return pick_with_ties(values, rng, [](double a, double b) { return a < b; });
}

UtilityTable value_iterate(const UtilityTable& utility, const SparseRows& rows, int steps, double gamma) {
    if (steps < 0) throw std::invalid_argument("value iteration needs a nonnegative step count");
    const int m = utility.n_actions();
    const int n = utility.n_states();
    UtilityTable q = utility;
    std::vector<double> v(n);
    for (int step = 0; step < steps; ++step) {
        for (StateId s = 0; s < n; ++s) {
            double best = q(0, s);
            for (ActionId a = 1; a < m; ++a) best = std::max(best, q(a, s));
            v[s] = best;
        }
        for (ActionId a = 0; a < m; ++a)
            for (StateId s = 0; s < n; ++s) {
                double future = 0.0;
                for (const auto& [next, p] : rows.row(a, s)) future += p * v[next];
                q(a, s) = utility(a, s) + gamma * future;
            }
    }
    return q;
}

void q_update(UtilityTable& q, double utility_observed, ActionId a, StateId s, StateId next, const QParams& params) {
    double best_next = q(0, next);
    for (ActionId b = 1; b < q.n_actions(); ++b) best_next = std::max(best_next, q(b, next));
    q(a, s) = (1.0 - params.alpha) * q(a, s) + params.alpha * (utility_observed + params.gamma * best_next);
}

Agent::Agent(StrategySpec spec, const PriorSpec& prior, StateId start, std::uint64_t seed,
             const TransitionKernel* truth)
    : spec_(spec), model_(prior), truth_(truth), current_(start), rng_(seed) {
    const int n = model_.n_states();
    const int m = model_.n_actions();
    if (start < 0 || start >= n) throw std::out_of_range("start state out of range");
    if (spec_.needs_truth()) {
        if (truth_ == nullptr) throw std::invalid_argument(spec_.name() + " needs the true kernel");
        truth_rows_ = sparse_rows(*truth_);
    }
    if (spec_.vi_steps < 0) throw std::invalid_argument("vi_steps must be >= 0");
    if (spec_.vi_gamma < 0.0 || spec_.vi_gamma > 1.0) throw std::invalid_argument("vi gamma must lie in [0,1]");

    model_rows_.n_states = n;
    model_rows_.n_actions = m;
    model_rows_.rows.resize(static_cast<std::size_t>(n) * m);
    scratch_row_.resize(n);
    for (ActionId a = 0; a < m; ++a)
        for (StateId s = 0; s < n; ++s) {
            model_.predict_into(a, s, scratch_row_);
            model_rows_.row(a, s) = sparse_row(scratch_row_);
        }

    if (spec_.uses_utility()) {
        if (spec_.utility == Utility::PEIG) {
            peig_.emplace(model_, spec_.peig_init);
            utility_ = peig_->table();
        } else {
            utility_ = utility_table(spec_.utility, model_);
        }
    } else {
        utility_ = UtilityTable(m, n);
    }
    if (spec_.coordination == Coordination::QLearn) q_ = utility_table(Utility::PIG, model_);
    action_counts_.assign(static_cast<std::size_t>(n) * m, 0);
    visit_counts_.assign(n, 0);
    ++visit_counts_[start];
}

ActionId Agent::choose_random() {
    return std::uniform_int_distribution<int>(0, model_.n_actions() - 1)(rng_);
}

ActionId Agent::choose_lta() {
    std::vector<double> counts(model_.n_actions());
    for (ActionId a = 0; a < model_.n_actions(); ++a) counts[a] = action_count(a, current_);
    return argmin_random_tie(counts, rng_);
}

ActionId Agent::choose_cb() {
    std::vector<double> expected(model_.n_actions(), 0.0);
    for (ActionId a = 0; a < model_.n_actions(); ++a)
        for (const auto& [next, p] : model_rows_.row(a, current_)) expected[a] += p * visit_counts_[next];
    return argmin_random_tie(expected, rng_);
}

ActionId Agent::choose_greedy() {
    std::vector<double> values(model_.n_actions());
    for (ActionId a = 0; a < model_.n_actions(); ++a) values[a] = utility_(a, current_);
    return argmax_random_tie(values, rng_);
}

namespace {

ActionId argmax_at(const UtilityTable& q, StateId s, Rng& rng) {
    std::vector<double> values(q.n_actions());
    for (ActionId a = 0; a < q.n_actions(); ++a) values[a] = q(a, s);
    return argmax_random_tie(values, rng);
}

}  // namespace

ActionId Agent::choose_vi() {
    return argmax_at(value_iterate(utility_, model_rows_, spec_.vi_steps, spec_.vi_gamma), current_, rng_);
}

ActionId Agent::choose_vi_plus() {
    if (!truth_rows_) throw std::logic_error("VI+ requires the true kernel");
    return argmax_at(value_iterate(utility_, *truth_rows_, spec_.vi_steps, spec_.vi_gamma), current_, rng_);
}

ActionId Agent::choose_q() { return argmax_at(q_, current_, rng_); }

Choice Agent::choose_unembodied() {
    const int pick = argmax_random_tie(utility_.values(), rng_);
    return {pick / model_.n_states(), pick % model_.n_states()};
}

Choice Agent::choose() {
    switch (spec_.coordination) {
        case Coordination::Random: return {choose_random(), current_};
        case Coordination::LTA: return {choose_lta(), current_};
        case Coordination::CounterBased: return {choose_cb(), current_};
        case Coordination::Greedy: return {choose_greedy(), current_};
        case Coordination::VI: return {choose_vi(), current_};
        case Coordination::VIPlus: return {choose_vi_plus(), current_};
        case Coordination::QLearn: return {choose_q(), current_};
        case Coordination::Unembodied: return choose_unembodied();
    }
    throw std::logic_error("unhandled coordination");
}

void Agent::observe(ActionId a, StateId s, StateId next) {
    const double utility_before = utility_(a, s);
    std::vector<double> before;
    if (peig_) before = model_.predict(a, s);

    model_.update(a, s, next);
    model_.predict_into(a, s, scratch_row_);
    model_rows_.row(a, s) = sparse_row(scratch_row_);

    ++action_counts_[static_cast<std::size_t>(a) * model_.n_states() + s];
    ++visit_counts_[next];
    ++steps_;

    double observed_utility = utility_before;
    if (peig_) {
        observed_utility = peig_observe(*peig_, before, scratch_row_, a, s);
        utility_(a, s) = observed_utility;
    } else if (spec_.uses_utility()) {
        utility_(a, s) = row_utility(spec_.utility, model_, a, s);
    }
    if (spec_.coordination == Coordination::QLearn) q_update(q_, observed_utility, a, s, next, spec_.q);
    current_ = next;
}

}  // namespace cmc
