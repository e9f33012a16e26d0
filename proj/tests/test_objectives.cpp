#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmc/inference.hpp"
#include "cmc/objectives.hpp"
#include "cmc/worlds.hpp"

using namespace cmc;

namespace {

double log2d(double x) { return std::log(x) / std::log(2.0); }

// Exact E over (target set ~ posterior, s* ~ row) of the realized information gain,
// by listing every admissible target set of a 1-2-3 action.
double enumerated_expected_gain(const OneTwoThree& prior, ActionId a, const std::vector<StateId>& history) {
    const int n = prior.n_states;
    const int k = a + 1;
    const double q = 1.0 - std::pow(0.75, k);
    PosteriorModel model(prior);
    for (StateId h : history) model.update(a, 0, h);
    const auto before = model.predict(a, 0);

    double weight_sum = 0.0, gain_sum = 0.0;
    std::vector<int> pick(n, 0);
    std::fill(pick.end() - k, pick.end(), 1);
    do {
        std::vector<StateId> set;
        for (int i = 0; i < n; ++i)
            if (pick[i]) set.push_back(i);
        const bool has_zero = pick[0];
        double w = has_zero ? q / binomial(n - 1, k - 1) : (1.0 - q) / binomial(n - 1, k);
        for (StateId h : history)
            if (!pick[h]) w = 0.0;
        if (w == 0.0) continue;
        w *= std::pow(1.0 / k, static_cast<double>(history.size()));
        double gain = 0.0;
        for (StateId star : set) {
            const auto after = model.hypothetical_row(a, 0, star);
            double ig = 0.0;
            for (StateId t : set) ig += (1.0 / k) * log2d(after[t] / before[t]);
            gain += ig / k;
        }
        weight_sum += w;
        gain_sum += w * gain;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return gain_sum / weight_sum;
}

}  // namespace

TEST_CASE("kl_bits") {
    const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75}, z{1.0, 0.0};
    CHECK(kl_bits(p, p) == 0.0);
    CHECK(kl_bits(p, q) == doctest::Approx(0.5 * log2d(2.0) + 0.5 * log2d(2.0 / 3.0)));
    CHECK(std::isinf(kl_bits(p, z)));
    CHECK(kl_bits(z, p) == doctest::Approx(1.0));
}

TEST_CASE("missing information") {
    TransitionKernel truth(10, 1);
    for (int s = 0; s < 10; ++s) truth(0, s, 0) = 1.0;
    PosteriorModel model(DirichletDense{10, 1, 1.0});
    const auto mi = missing_information(truth, model);
    CHECK(mi.finite());
    CHECK(mi.bits == doctest::Approx(10 * log2d(10.0)));
    CHECK(missing_information(truth, truth) == 0.0);

    // estimate with a hole under the truth's support
    TransitionKernel hole(10, 1);
    for (int s = 0; s < 10; ++s) hole(0, s, 1) = 1.0;
    CHECK(std::isinf(missing_information(truth, hole)));
}

TEST_CASE("information gain telescopes along a trajectory") {
    Rng rng(3);
    for (auto wc : {WorldClass::Dense, WorldClass::Maze, WorldClass::OneTwoThree}) {
        const auto world = generate_world(wc, rng);
        PosteriorModel model(world.prior);
        const double start = missing_information(world.kernel, model).bits;
        double total = 0.0;
        std::uniform_int_distribution<int> act(0, world.kernel.n_actions() - 1);
        StateId s = 0;
        for (int t = 0; t < 300; ++t) {
            const ActionId a = act(rng);
            const StateId next = sample_transition(world.kernel, a, s, rng);
            total += information_gain(world.kernel, model, a, s, next);
            model.update(a, s, next);
            s = next;
        }
        const double end = missing_information(world.kernel, model).bits;
        CHECK(total == doctest::Approx(start - end).epsilon(1e-9));
    }
}

TEST_CASE("missing information falls under Bayesian updates on average") {
    Rng rng(8);
    int lower = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        const auto world = gen_dense(rng);
        PosteriorModel model(world.prior);
        const double start = missing_information(world.kernel, model).bits;
        StateId s = 0;
        for (int t = 0; t < 200; ++t) {
            const ActionId a = std::uniform_int_distribution<int>(0, 3)(rng);
            const StateId next = sample_transition(world.kernel, a, s, rng);
            model.update(a, s, next);
            s = next;
        }
        lower += missing_information(world.kernel, model).bits < start;
    }
    CHECK(lower >= trials * 95 / 100);
}

TEST_CASE("PIG on a fresh dense model") {
    PosteriorModel m(DirichletDense{});
    // every s* gives the (2/11, 1/11 x9) row
    const double per_star = 2.0 / 11.0 * log2d(20.0 / 11.0) + 9.0 / 11.0 * log2d(10.0 / 11.0);
    for (ActionId a = 0; a < 4; ++a)
        for (StateId s = 0; s < 10; ++s) CHECK(pig(m, a, s) == doctest::Approx(per_star).epsilon(1e-12));
    CHECK(per_star == doctest::Approx(0.04431).epsilon(1e-3));
}

TEST_CASE("PIG closed form equals the term-by-term sum") {
    Rng rng(11);
    for (auto wc : {WorldClass::Dense, WorldClass::Maze, WorldClass::OneTwoThree}) {
        const auto world = generate_world(wc, rng);
        PosteriorModel model(world.prior);
        StateId s = 0;
        for (int t = 0; t < 400; ++t) {
            const ActionId a = std::uniform_int_distribution<int>(0, world.kernel.n_actions() - 1)(rng);
            CHECK(pig(model, a, s) == doctest::Approx(pig_reference(model, a, s)).epsilon(1e-10));
            const StateId next = sample_transition(world.kernel, a, s, rng);
            model.update(a, s, next);
            s = next;
        }
    }
}

TEST_CASE("PIG is zero exactly for known rows") {
    PosteriorModel d(OneTwoThree{});
    d.update(0, 3, 8);
    CHECK(pig(d, 0, 3) == 0.0);
    d.update(1, 3, 8);
    CHECK(pig(d, 1, 3) > 0.0);
    d.update(1, 3, 2);
    CHECK(pig(d, 1, 3) == 0.0);

    MazeDirichlet prior{2, 1, 0.25, {{0}, {0, 1}}};
    PosteriorModel m(prior);
    CHECK(pig(m, 0, 0) == 0.0);
    CHECK(pig(m, 0, 1) > 0.0);
}

TEST_CASE("PIG equals expected gain exactly on 1-2-3 rows") {
    const OneTwoThree prior{8, 3};
    const std::vector<std::vector<StateId>> histories{{}, {0}, {3}, {3, 3}, {0, 5}, {2, 6}, {0, 0, 0}};
    for (ActionId a = 0; a < 3; ++a)
        for (const auto& h : histories) {
            std::vector<StateId> distinct = h;
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            if (static_cast<int>(distinct.size()) > a + 1) continue;
            PosteriorModel m(prior);
            for (StateId x : h) m.update(a, 0, x);
            CHECK(std::abs(pig(m, a, 0) - enumerated_expected_gain(prior, a, h)) <= 1e-9);
        }
}

TEST_CASE("PIG matches Monte Carlo expected gain for Dirichlet rows") {
    Rng rng(21);
    const MazeDirichlet maze{3, 1, 0.25, {{0, 1, 2}, {0, 1}, {2}}};
    for (const PriorSpec& prior : {PriorSpec{DirichletDense{}}, PriorSpec{maze}}) {
        PosteriorModel model(prior);
        model.update(0, 0, 1);
        model.update(0, 0, 1);
        model.update(0, 0, 2);
        const auto before = model.predict(0, 0);
        const int draws = 20000;
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < draws; ++i) {
            const auto theta = model.sample_row(0, 0, rng);
            const StateId star = sample_categorical(theta, rng);
            const auto after = model.hypothetical_row(0, 0, star);
            double ig = 0.0;
            for (std::size_t k = 0; k < theta.size(); ++k)
                if (theta[k] > 0) ig += theta[k] * log2d(after[k] / before[k]);
            s1 += ig;
            s2 += ig * ig;
        }
        const double mean = s1 / draws;
        const double se = std::sqrt((s2 / draws - mean * mean) / draws);
        CHECK(std::abs(mean - pig(model, 0, 0)) <= 3.0 * se);
    }
}

TEST_CASE("PMC and PLC on a fresh dense model") {
    PosteriorModel m(DirichletDense{});
    CHECK(pmc(m, 0, 0) == doctest::Approx(9.0 / 110.0));
    // each s* moves one entry by 9/110 and nine by 1/110
    CHECK(plc(m, 0, 0) == doctest::Approx(0.1 * 18.0 / 110.0));

    PosteriorModel d(OneTwoThree{});
    d.update(0, 1, 4);
    CHECK(pmc(d, 0, 1) == 0.0);
    CHECK(plc(d, 0, 1) == 0.0);

    MazeDirichlet prior{2, 1, 0.25, {{1}, {0, 1}}};
    PosteriorModel single(prior);
    CHECK(pmc(single, 0, 0) == 0.0);

    Rng rng(5);
    const auto w = gen_dense(rng);
    PosteriorModel model(w.prior);
    StateId s = 0;
    for (int t = 0; t < 200; ++t) {
        const ActionId a = t % 4;
        const double value = plc(model, a, s);
        CHECK(value >= 0.0);
        CHECK(value <= 2.0 / 10.0);
        CHECK(std::isfinite(pmc(model, a, s)));
        const StateId next = sample_transition(w.kernel, a, s, rng);
        model.update(a, s, next);
        s = next;
    }
}

TEST_CASE("L1 error") {
    TransitionKernel truth(10, 1);
    for (int s = 0; s < 10; ++s) truth(0, s, s == 0 ? 1 : 0) = 1.0;
    PosteriorModel model(DirichletDense{10, 1, 1.0});
    // one row: (1/10)(0.9 + 9 * 0.1)
    CHECK(l1_error(truth, model) == doctest::Approx(10 * 0.18));

    Rng rng(1);
    const auto w = gen_dense(rng);
    CHECK(l1_error(w.kernel, PosteriorModel(w.prior)) <= 2.0 * 4);
}

TEST_CASE("PEIG bookkeeping") {
    PosteriorModel before(DirichletDense{});
    PeigState state(before);
    const double init = pig(before, 0, 0);
    CHECK(state(2, 5) == doctest::Approx(init));
    CHECK(PeigState(before, PeigInit::Zero)(2, 5) == 0.0);

    PosteriorModel after = before;
    after.update(0, 0, 0);
    const double stored = peig_observe(state, before, after, 0, 0);
    const double expected = 2.0 / 11.0 * log2d(20.0 / 11.0) + 9.0 / 11.0 * log2d(10.0 / 11.0);
    CHECK(stored == doctest::Approx(expected));
    CHECK(state(0, 0) == stored);

    PosteriorModel known(OneTwoThree{});
    known.update(0, 0, 3);
    PosteriorModel again = known;
    again.update(0, 0, 3);
    PeigState s2(known);
    CHECK(peig_observe(s2, known, again, 0, 0) == 0.0);
}

TEST_CASE("utility tables") {
    PosteriorModel m(DirichletDense{});
    m.update(1, 1, 1);
    const auto table = utility_table(Utility::PIG, m);
    CHECK(table(1, 1) < table(0, 0));
    CHECK(table(1, 1) == pig(m, 1, 1));
    CHECK_THROWS(row_utility(Utility::PEIG, m, 0, 0));
    CHECK(parse_utility("plc") == Utility::PLC);
    CHECK_THROWS(parse_utility("xyz"));
}
