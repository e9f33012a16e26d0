#include "cmc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cmc {

double binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

PosteriorModel::PosteriorModel(const PriorSpec& prior) {
    validate_prior(prior);
    n_states_ = prior_states(prior);
    n_actions_ = prior_actions(prior);
    const std::size_t rows = static_cast<std::size_t>(n_states_) * n_actions_;
    totals_.assign(rows, 0);
    if (const auto* d = std::get_if<DirichletDense>(&prior)) {
        DirichletCounts stats;
        stats.alpha = d->alpha;
        std::vector<StateId> all(n_states_);
        std::iota(all.begin(), all.end(), 0);
        stats.support.assign(rows, all);
        stats.counts.assign(rows, std::vector<int>(n_states_, 0));
        stats_ = std::move(stats);
    } else if (const auto* m = std::get_if<MazeDirichlet>(&prior)) {
        DirichletCounts stats;
        stats.alpha = m->alpha;
        stats.support = m->support;
        for (const auto& row : stats.support) stats.counts.emplace_back(row.size(), 0);
        stats_ = std::move(stats);
    } else {
        DiscreteOneTwoThree stats;
        stats.observed.assign(rows, {});
        stats_ = std::move(stats);
    }
}

void one_two_three_row(int n_states, int n_targets, std::span<const StateId> observed, std::span<double> out) {
    const int a = n_targets;
    const int t = static_cast<int>(observed.size());
    const double w = 1.0 / a;
    std::fill(out.begin(), out.end(), 0.0);
    for (StateId s : observed) out[s] = w;
    if (t >= a) return;

    const bool zero_seen = std::find(observed.begin(), observed.end(), 0) != observed.end();
    if (zero_seen) {
        // every admissible completion draws the a - t missing targets uniformly from the unseen states
        const double p = (1.0 - static_cast<double>(t) / a) / (n_states - t);
        for (StateId s = 0; s < n_states; ++s)
            if (out[s] == 0.0) out[s] = p;
        return;
    }
    // posterior odds of state 0 being a target: count admissible sets with and without it
    const double q = 1.0 - std::pow(0.75, a);
    const int n = n_states;
    const double with_zero = q * binomial(n - 1 - t, a - 1 - t) / binomial(n - 1, a - 1);
    const double without_zero = (1.0 - q) * binomial(n - 1 - t, a - t) / binomial(n - 1, a);
    const double p_zero = with_zero / (with_zero + without_zero) * w;
    out[0] = p_zero;
    const int unseen_others = n - t - 1;
    const double p_other = (1.0 - static_cast<double>(t) / a - p_zero) / unseen_others;
    for (StateId s = 1; s < n_states; ++s)
        if (out[s] == 0.0) out[s] = p_other;
}

void PosteriorModel::predict_into(ActionId a, StateId s, std::span<double> out) const {
    const std::size_t r = row_index(a, s);
    if (const auto* d = std::get_if<DirichletCounts>(&stats_)) {
        std::fill(out.begin(), out.end(), 0.0);
        const auto& support = d->support[r];
        const auto& counts = d->counts[r];
        const double denom = totals_[r] + d->alpha * static_cast<double>(support.size());
        for (std::size_t k = 0; k < support.size(); ++k) out[support[k]] = (d->alpha + counts[k]) / denom;
    } else {
        const auto& obs = std::get<DiscreteOneTwoThree>(stats_).observed[r];
        one_two_three_row(n_states_, a + 1, obs, out);
    }
}

std::vector<double> PosteriorModel::predict(ActionId a, StateId s) const {
    std::vector<double> out(n_states_);
    predict_into(a, s, out);
    return out;
}

void PosteriorModel::update(ActionId a, StateId s, StateId next) {
    if (next < 0 || next >= n_states_) throw std::out_of_range("next state out of range");
    const std::size_t r = row_index(a, s);
    if (auto* d = std::get_if<DirichletCounts>(&stats_)) {
        const auto& support = d->support[r];
        auto it = std::find(support.begin(), support.end(), next);
        if (it == support.end()) throw std::invalid_argument("observed transition outside the prior support");
        ++d->counts[r][static_cast<std::size_t>(it - support.begin())];
    } else {
        auto& obs = std::get<DiscreteOneTwoThree>(stats_).observed[r];
        auto it = std::lower_bound(obs.begin(), obs.end(), next);
        if (it == obs.end() || *it != next) {
            if (static_cast<int>(obs.size()) >= a + 1)
                throw std::invalid_argument("observation exceeds the target count of a 1-2-3 action");
            obs.insert(it, next);
        }
    }
    ++totals_[r];
}

std::vector<double> PosteriorModel::hypothetical_row(ActionId a, StateId s, StateId s_star) const {
    const std::size_t r = row_index(a, s);
    std::vector<double> out(n_states_, 0.0);
    if (const auto* d = std::get_if<DirichletCounts>(&stats_)) {
        const auto& support = d->support[r];
        const auto& counts = d->counts[r];
        const double denom = totals_[r] + 1 + d->alpha * static_cast<double>(support.size());
        for (std::size_t k = 0; k < support.size(); ++k)
            out[support[k]] = (d->alpha + counts[k] + (support[k] == s_star ? 1 : 0)) / denom;
    } else {
        auto obs = std::get<DiscreteOneTwoThree>(stats_).observed[r];
        auto it = std::lower_bound(obs.begin(), obs.end(), s_star);
        if (it == obs.end() || *it != s_star) obs.insert(it, s_star);
        one_two_three_row(n_states_, a + 1, obs, out);
    }
    return out;
}

std::vector<double> PosteriorModel::sample_row(ActionId a, StateId s, Rng& rng) const {
    const std::size_t r = row_index(a, s);
    std::vector<double> out(n_states_, 0.0);
    if (const auto* d = std::get_if<DirichletCounts>(&stats_)) {
        const auto& support = d->support[r];
        const auto& counts = d->counts[r];
        double total = 0.0;
        std::vector<double> draws(support.size());
        do {
            total = 0.0;
            for (std::size_t k = 0; k < support.size(); ++k) {
                std::gamma_distribution<double> gamma(d->alpha + counts[k], 1.0);
                draws[k] = gamma(rng);
                total += draws[k];
            }
        } while (total <= 0.0);
        for (std::size_t k = 0; k < support.size(); ++k) out[support[k]] = draws[k] / total;
        return out;
    }
    const auto& obs = std::get<DiscreteOneTwoThree>(stats_).observed[r];
    const int n_targets = a + 1;
    const int t = static_cast<int>(obs.size());
    std::vector<StateId> chosen(obs.begin(), obs.end());
    const bool zero_seen = !obs.empty() && obs.front() == 0;
    if (t < n_targets) {
        int missing = n_targets - t;
        if (!zero_seen) {
            const double q = 1.0 - std::pow(0.75, n_targets);
            const int n = n_states_;
            const double with_zero = q * binomial(n - 1 - t, n_targets - 1 - t) / binomial(n - 1, n_targets - 1);
            const double without_zero = (1.0 - q) * binomial(n - 1 - t, n_targets - t) / binomial(n - 1, n_targets);
            std::bernoulli_distribution include_zero(with_zero / (with_zero + without_zero));
            if (include_zero(rng)) {
                chosen.push_back(0);
                --missing;
            }
        }
        std::vector<StateId> pool;
        for (StateId x = 1; x < n_states_; ++x)
            if (std::find(obs.begin(), obs.end(), x) == obs.end()) pool.push_back(x);
        std::shuffle(pool.begin(), pool.end(), rng);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + missing);
    }
    for (StateId x : chosen) out[x] = 1.0 / n_targets;
    return out;
}

TransitionKernel PosteriorModel::estimate() const {
    TransitionKernel k(n_states_, n_actions_);
    for (ActionId a = 0; a < n_actions_; ++a)
        for (StateId s = 0; s < n_states_; ++s) predict_into(a, s, k.row(a, s));
    return k;
}

std::vector<double> enumeration_oracle(const OneTwoThree& prior, ActionId a, std::span<const StateId> history) {
    const int n = prior.n_states;
    const int n_targets = a + 1;
    const double q = 1.0 - std::pow(0.75, n_targets);
    const double w_with = q / binomial(n - 1, n_targets - 1);
    const double w_without = (1.0 - q) / binomial(n - 1, n_targets);
    const double likelihood = std::pow(1.0 / n_targets, static_cast<double>(history.size()));

    std::vector<double> mass(n, 0.0);
    double evidence = 0.0;
    // walk every n_targets-subset of {0..n-1} in lexicographic order
    std::vector<int> idx(n_targets);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        bool consistent = true;
        for (StateId h : history)
            if (std::find(idx.begin(), idx.end(), h) == idx.end()) {
                consistent = false;
                break;
            }
        if (consistent) {
            const double weight = (idx.front() == 0 ? w_with : w_without) * likelihood;
            evidence += weight;
            for (int x : idx) mass[x] += weight / n_targets;
        }
        int i = n_targets - 1;
        while (i >= 0 && idx[i] == n - n_targets + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < n_targets; ++j) idx[j] = idx[j - 1] + 1;
    }
    if (evidence <= 0.0) throw std::invalid_argument("history is inconsistent with the 1-2-3 prior");
    for (auto& p : mass) p /= evidence;
    return mass;
}

nlohmann::json PosteriorModel::snapshot() const {
    using nlohmann::json;
    json j;
    j["n_states"] = n_states_;
    j["n_actions"] = n_actions_;
    j["totals"] = totals_;
    if (const auto* d = std::get_if<DirichletCounts>(&stats_)) {
        j["kind"] = "dirichlet";
        j["alpha"] = d->alpha;
        j["support"] = d->support;
        j["counts"] = d->counts;
    } else {
        j["kind"] = "one_two_three";
        j["observed"] = std::get<DiscreteOneTwoThree>(stats_).observed;
    }
    return j;
}

PosteriorModel PosteriorModel::from_snapshot(const nlohmann::json& j) {
    PosteriorModel m;
    m.n_states_ = j.at("n_states").get<int>();
    m.n_actions_ = j.at("n_actions").get<int>();
    m.totals_ = j.at("totals").get<std::vector<int>>();
    if (j.at("kind") == "dirichlet") {
        DirichletCounts d;
        d.alpha = j.at("alpha").get<double>();
        d.support = j.at("support").get<std::vector<std::vector<StateId>>>();
        d.counts = j.at("counts").get<std::vector<std::vector<int>>>();
        m.stats_ = std::move(d);
    } else {
        m.stats_ = DiscreteOneTwoThree{j.at("observed").get<std::vector<std::vector<StateId>>>()};
    }
    return m;
}

}  // namespace cmc
