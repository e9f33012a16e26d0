#include "cmc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace cmc {

TransitionKernel::TransitionKernel(int n_states, int n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      probs_(static_cast<std::size_t>(n_actions) * n_states * n_states, 0.0) {
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("kernel needs at least one state and one action");
}

TransitionKernel::TransitionKernel(int n_states, int n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("kernel needs at least one state and one action");
    if (probs_.size() != static_cast<std::size_t>(n_actions) * n_states * n_states)
        throw std::invalid_argument("kernel probability tensor has the wrong size");
    // -0.0 compares equal to 0.0 but would print with a sign in dumps
    for (auto& p : probs_)
        if (p == 0.0) p = 0.0;
}

void TransitionKernel::set_row(ActionId a, StateId s, std::span<const double> values) {
    if (values.size() != static_cast<std::size_t>(n_states_))
        throw std::invalid_argument("row length does not match the state count");
    auto dst = row(a, s);
    std::copy(values.begin(), values.end(), dst.begin());
    for (auto& p : dst)
        if (p == 0.0) p = 0.0;
}

std::vector<std::pair<StateId, double>> sparse_row(std::span<const double> row) {
    std::vector<std::pair<StateId, double>> out;
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] > 0.0) out.emplace_back(static_cast<StateId>(i), row[i]);
    return out;
}

SparseRows sparse_rows(const TransitionKernel& kernel) {
    SparseRows out;
    out.n_states = kernel.n_states();
    out.n_actions = kernel.n_actions();
    out.rows.reserve(static_cast<std::size_t>(out.n_states) * out.n_actions);
    for (ActionId a = 0; a < kernel.n_actions(); ++a)
        for (StateId s = 0; s < kernel.n_states(); ++s) out.rows.push_back(sparse_row(kernel.row(a, s)));
    return out;
}

void validate(const TransitionKernel& kernel) {
    for (ActionId a = 0; a < kernel.n_actions(); ++a) {
        for (StateId s = 0; s < kernel.n_states(); ++s) {
            auto row = kernel.row(a, s);
            double sum = 0.0;
            bool in_range = true;
            for (double p : row) {
                if (!(p >= 0.0 && p <= 1.0)) in_range = false;
                sum += p;
            }
            if (!in_range || std::abs(sum - 1.0) > kStochasticTol) {
                std::ostringstream msg;
                msg << "invalid transition row (a=" << a << ", s=" << s << "): sum " << std::setprecision(17)
                    << sum << (in_range ? "" : ", entry outside [0,1]");
                throw InvalidKernel(a, s, sum, msg.str());
            }
        }
    }
}

void validate_distribution(std::span<const double> dist) {
    double sum = 0.0;
    for (double p : dist) {
        if (!(p >= 0.0)) throw std::invalid_argument("distribution has a negative or NaN entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kStochasticTol) throw std::invalid_argument("distribution does not sum to 1");
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    const double u = unit(rng) * total;
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last_positive = static_cast<int>(i);
        if (u < acc) return last_positive;
    }
    return last_positive;
}

StateId sample_transition(const TransitionKernel& kernel, ActionId a, StateId s, Rng& rng) {
    if (a < 0 || a >= kernel.n_actions() || s < 0 || s >= kernel.n_states())
        throw std::out_of_range("action or state out of range");
    return sample_categorical(kernel.row(a, s), rng);
}

std::vector<double> averaged_chain(const TransitionKernel& kernel) {
    const int n = kernel.n_states();
    const double w = 1.0 / kernel.n_actions();
    std::vector<double> chain(static_cast<std::size_t>(n) * n, 0.0);
    for (ActionId a = 0; a < kernel.n_actions(); ++a)
        for (StateId s = 0; s < n; ++s) {
            auto row = kernel.row(a, s);
            for (StateId t = 0; t < n; ++t) chain[static_cast<std::size_t>(s) * n + t] += w * row[t];
        }
    return chain;
}

namespace {

// out = dist * chain
void propagate(std::span<const double> dist, const std::vector<double>& chain, std::vector<double>& out) {
    const std::size_t n = dist.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        if (dist[s] == 0.0) continue;
        const double* row = chain.data() + s * n;
        for (std::size_t t = 0; t < n; ++t) out[t] += dist[s] * row[t];
    }
}

}  // namespace

StateDistribution equilibrium_distribution(const TransitionKernel& kernel, double tol, int max_iter) {
    const int n = kernel.n_states();
    const auto chain = averaged_chain(kernel);
    StateDistribution psi(n, 1.0 / n);
    std::vector<double> next(n);
    for (int it = 0; it < max_iter; ++it) {
        propagate(psi, chain, next);
        double residual = 0.0;
        for (int s = 0; s < n; ++s) residual += std::abs(next[s] - psi[s]);
        if (residual <= tol) return psi;
        double total = 0.0;
        for (int s = 0; s < n; ++s) {
            psi[s] = 0.5 * (psi[s] + next[s]);
            total += psi[s];
        }
        for (auto& p : psi) p /= total;
    }
    throw std::runtime_error("equilibrium distribution did not converge");
}

double entropy_bits(std::span<const double> dist) {
    double h = 0.0;
    for (double p : dist)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

double structure_index(std::span<const double> psi) {
    if (psi.size() < 2) throw std::invalid_argument("structure index is undefined for a single state");
    validate_distribution(psi);
    const double h_uniform = std::log2(static_cast<double>(psi.size()));
    const double si = (h_uniform - entropy_bits(psi)) / h_uniform;
    return std::clamp(si, 0.0, 1.0);
}

double controllability(const TransitionKernel& kernel, StateId s0, int t) {
    if (t < 1) throw std::invalid_argument("controllability horizon must be >= 1");
    const int n = kernel.n_states();
    const int m = kernel.n_actions();
    const auto chain = averaged_chain(kernel);
    std::vector<std::vector<double>> conditional(m);
    std::vector<double> scratch(n);
    for (ActionId a = 0; a < m; ++a) {
        auto row = kernel.row(a, s0);
        conditional[a].assign(row.begin(), row.end());
        for (int step = 1; step < t; ++step) {
            propagate(conditional[a], chain, scratch);
            conditional[a].swap(scratch);
        }
    }
    std::vector<double> marginal(n, 0.0);
    for (const auto& c : conditional)
        for (int s = 0; s < n; ++s) marginal[s] += c[s] / m;
    double mi = 0.0;
    for (const auto& c : conditional)
        for (int s = 0; s < n; ++s)
            if (c[s] > 0.0) mi += c[s] / m * std::log2(c[s] / marginal[s]);
    return std::clamp(mi, 0.0, std::log2(static_cast<double>(m)));
}

double mean_controllability(const TransitionKernel& kernel, int t) {
    double total = 0.0;
    for (StateId s = 0; s < kernel.n_states(); ++s) total += controllability(kernel, s, t);
    return total / kernel.n_states();
}

bool is_ergodic(const TransitionKernel& kernel) {
    const int n = kernel.n_states();
    std::vector<std::vector<StateId>> forward(n), backward(n);
    for (StateId s = 0; s < n; ++s)
        for (StateId t = 0; t < n; ++t) {
            bool edge = false;
            for (ActionId a = 0; a < kernel.n_actions() && !edge; ++a) edge = kernel(a, s, t) > 0.0;
            if (edge) {
                forward[s].push_back(t);
                backward[t].push_back(s);
            }
        }
    auto reaches_all = [n](const std::vector<std::vector<StateId>>& adj) {
        std::vector<char> seen(n, 0);
        std::vector<StateId> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            StateId s = stack.back();
            stack.pop_back();
            for (StateId t : adj[s])
                if (!seen[t]) {
                    seen[t] = 1;
                    ++count;
                    stack.push_back(t);
                }
        }
        return count == n;
    };
    return reaches_all(forward) && reaches_all(backward);
}

void write_kernel(std::ostream& out, const TransitionKernel& kernel) {
    out << "cmc-kernel " << kernel.n_states() << ' ' << kernel.n_actions() << '\n';
    out << std::setprecision(17);
    for (ActionId a = 0; a < kernel.n_actions(); ++a)
        for (StateId s = 0; s < kernel.n_states(); ++s) {
            auto row = kernel.row(a, s);
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
            out << '\n';
        }
}

TransitionKernel read_kernel(std::istream& in) {
    std::string tag;
    int n = 0, m = 0;
    if (!(in >> tag >> n >> m) || tag != "cmc-kernel") throw std::runtime_error("not a cmc-kernel dump");
    std::vector<double> probs(static_cast<std::size_t>(m) * n * n);
    for (auto& p : probs)
        if (!(in >> p)) throw std::runtime_error("truncated cmc-kernel dump");
    return TransitionKernel(n, m, std::move(probs));
}

}  // namespace cmc
