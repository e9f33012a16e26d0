#include "cmc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cmc {

double kl_bits(std::span<const double> p, std::span<const double> q) {
    double out = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        out += p[i] * std::log2(p[i] / q[i]);
    }
    return std::max(out, 0.0);
}

std::string to_string(Utility u) {
    switch (u) {
        case Utility::PIG: return "pig";
        case Utility::PEIG: return "peig";
        case Utility::PMC: return "pmc";
        case Utility::PLC: return "plc";
    }
    return "?";
}

Utility parse_utility(const std::string& name) {
    if (name == "pig") return Utility::PIG;
    if (name == "peig") return Utility::PEIG;
    if (name == "pmc") return Utility::PMC;
    if (name == "plc") return Utility::PLC;
    throw std::invalid_argument("unknown utility '" + name + "'");
}

MissingInformation missing_information(const TransitionKernel& truth, const PosteriorModel& model) {
    MissingInformation out;
    std::vector<double> row(truth.n_states());
    for (ActionId a = 0; a < truth.n_actions(); ++a)
        for (StateId s = 0; s < truth.n_states(); ++s) {
            model.predict_into(a, s, row);
            const double kl = kl_bits(truth.row(a, s), row);
            if (std::isinf(kl) && out.finite()) {
                out.bad_action = a;
                out.bad_state = s;
            }
            out.bits += kl;
        }
    return out;
}

double missing_information(const TransitionKernel& truth, const TransitionKernel& estimate) {
    double out = 0.0;
    for (ActionId a = 0; a < truth.n_actions(); ++a)
        for (StateId s = 0; s < truth.n_states(); ++s) out += kl_bits(truth.row(a, s), estimate.row(a, s));
    return out;
}

double information_gain(const TransitionKernel& truth, const PosteriorModel& model, ActionId a, StateId s,
                        StateId s_star) {
    const auto before = model.predict(a, s);
    const auto after = model.hypothetical_row(a, s, s_star);
    return kl_bits(truth.row(a, s), before) - kl_bits(truth.row(a, s), after);
}

double pig_reference(const PosteriorModel& model, ActionId a, StateId s) {
    const auto current = model.predict(a, s);
    double out = 0.0;
    for (StateId star = 0; star < model.n_states(); ++star) {
        if (current[star] <= 0.0) continue;
        out += current[star] * kl_bits(model.hypothetical_row(a, s, star), current);
    }
    return out;
}

double pig(const PosteriorModel& model, ActionId a, StateId s) {
    const std::size_t r = static_cast<std::size_t>(a) * model.n_states() + s;
    if (const auto* d = std::get_if<DirichletCounts>(&model.stats())) {
        // KL from the row updated with s* is log(W/(W+1)) + (alpha+c*+1)/(W+1) log((alpha+c*+1)/(alpha+c*))
        const auto& counts = d->counts[r];
        const double w = model.observations(a, s) + d->alpha * static_cast<double>(counts.size());
        double out = std::log2(w / (w + 1.0));
        for (int c : counts) {
            const double x = d->alpha + c;
            out += x / w * (x + 1.0) / (w + 1.0) * std::log2((x + 1.0) / x);
        }
        return std::max(out, 0.0);
    }
    // 1-2-3: hypothetical rows for unseen non-zero targets are permutations of one another
    const auto& obs = std::get<DiscreteOneTwoThree>(model.stats()).observed[r];
    if (static_cast<int>(obs.size()) >= a + 1) return 0.0;
    const auto current = model.predict(a, s);
    double out = 0.0;
    double other_mass = 0.0;
    StateId representative = -1;
    for (StateId star = 0; star < model.n_states(); ++star) {
        if (current[star] <= 0.0 || std::binary_search(obs.begin(), obs.end(), star)) continue;
        if (star == 0) {
            out += current[0] * kl_bits(model.hypothetical_row(a, s, 0), current);
        } else {
            if (representative < 0) representative = star;
            other_mass += current[star];
        }
    }
    if (representative >= 0) out += other_mass * kl_bits(model.hypothetical_row(a, s, representative), current);
    return out;
}

double pmc(const PosteriorModel& model, ActionId a, StateId s) {
    const auto current = model.predict(a, s);
    const double mode = *std::max_element(current.begin(), current.end());
    double out = 0.0;
    for (StateId star = 0; star < model.n_states(); ++star) {
        if (current[star] <= 0.0) continue;
        const auto next = model.hypothetical_row(a, s, star);
        out += current[star] * (*std::max_element(next.begin(), next.end()) - mode);
    }
    return out;
}

double plc(const PosteriorModel& model, ActionId a, StateId s) {
    const auto current = model.predict(a, s);
    const double n = model.n_states();
    double out = 0.0;
    for (StateId star = 0; star < model.n_states(); ++star) {
        if (current[star] <= 0.0) continue;
        const auto next = model.hypothetical_row(a, s, star);
        double l1 = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) l1 += std::abs(next[i] - current[i]);
        out += current[star] * l1 / n;
    }
    return out;
}

double l1_error(const TransitionKernel& truth, const PosteriorModel& model) {
    const double n = truth.n_states();
    std::vector<double> row(truth.n_states());
    double out = 0.0;
    for (ActionId a = 0; a < truth.n_actions(); ++a)
        for (StateId s = 0; s < truth.n_states(); ++s) {
            model.predict_into(a, s, row);
            auto t = truth.row(a, s);
            double l1 = 0.0;
            for (std::size_t i = 0; i < row.size(); ++i) l1 += std::abs(t[i] - row[i]);
            out += l1 / n;
        }
    return out;
}

double row_utility(Utility u, const PosteriorModel& model, ActionId a, StateId s) {
    switch (u) {
        case Utility::PIG: return pig(model, a, s);
        case Utility::PMC: return pmc(model, a, s);
        case Utility::PLC: return plc(model, a, s);
        case Utility::PEIG: break;
    }
    throw std::invalid_argument("PEIG has no row utility; use PeigState");
}

UtilityTable utility_table(Utility u, const PosteriorModel& model) {
    UtilityTable table(model.n_actions(), model.n_states());
    for (ActionId a = 0; a < model.n_actions(); ++a)
        for (StateId s = 0; s < model.n_states(); ++s) table(a, s) = row_utility(u, model, a, s);
    return table;
}

PeigState::PeigState(const PosteriorModel& prior_model, PeigInit init)
    : table_(init == PeigInit::PriorPig ? utility_table(Utility::PIG, prior_model)
                                        : UtilityTable(prior_model.n_actions(), prior_model.n_states())) {}

double peig_observe(PeigState& state, std::span<const double> before_row, std::span<const double> after_row,
                    ActionId a, StateId s) {
    const double value = kl_bits(after_row, before_row);
    state.set(a, s, value);
    return value;
}

double peig_observe(PeigState& state, const PosteriorModel& before, const PosteriorModel& after, ActionId a,
                    StateId s) {
    return peig_observe(state, before.predict(a, s), after.predict(a, s), a, s);
}

}  // namespace cmc
