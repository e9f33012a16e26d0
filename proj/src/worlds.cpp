#include "cmc/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cmc {

std::string to_string(WorldClass wc) {
    switch (wc) {
        case WorldClass::Dense: return "dense";
        case WorldClass::Maze: return "maze";
        case WorldClass::OneTwoThree: return "onetwothree";
    }
    return "unknown";
}

WorldClass parse_world_class(const std::string& name) {
    if (name == "dense") return WorldClass::Dense;
    if (name == "maze" || name == "mazes") return WorldClass::Maze;
    if (name == "onetwothree" || name == "123") return WorldClass::OneTwoThree;
    throw std::invalid_argument("unknown world class '" + name + "'");
}

int prior_states(const PriorSpec& prior) {
    return std::visit([](const auto& p) { return p.n_states; }, prior);
}

int prior_actions(const PriorSpec& prior) {
    return std::visit([](const auto& p) { return p.n_actions; }, prior);
}

void validate_prior(const PriorSpec& prior) {
    if (const auto* d = std::get_if<DirichletDense>(&prior)) {
        if (!(d->alpha > 0.0)) throw std::invalid_argument("Dirichlet concentration must be positive");
    } else if (const auto* m = std::get_if<MazeDirichlet>(&prior)) {
        if (!(m->alpha > 0.0)) throw std::invalid_argument("Dirichlet concentration must be positive");
        if (m->support.size() != static_cast<std::size_t>(m->n_states) * m->n_actions)
            throw std::invalid_argument("support table does not cover every row");
        for (const auto& row : m->support) {
            if (row.empty()) throw std::invalid_argument("empty support row");
            auto sorted = row;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw std::invalid_argument("duplicate support entry");
            if (sorted.front() < 0 || sorted.back() >= m->n_states)
                throw std::invalid_argument("support entry out of range");
        }
    } else if (const auto* o = std::get_if<OneTwoThree>(&prior)) {
        if (o->n_actions != 3) throw std::invalid_argument("1-2-3 prior needs exactly 3 actions");
        if (o->n_states < 4) throw std::invalid_argument("1-2-3 prior needs at least 4 states");
    }
}

double absorbing_target_probability(ActionId a) { return 1.0 - std::pow(0.75, a + 1); }

void draw_dirichlet(Rng& rng, double alpha, std::span<double> out) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    for (;;) {
        double total = 0.0;
        for (auto& x : out) {
            x = gamma(rng);
            total += x;
        }
        if (total > 0.0) {
            for (auto& x : out) x /= total;
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Dense worlds

DenseWorld gen_dense(Rng& rng, int n_states, int n_actions, double alpha) {
    TransitionKernel kernel(n_states, n_actions);
    for (ActionId a = 0; a < n_actions; ++a)
        for (StateId s = 0; s < n_states; ++s) draw_dirichlet(rng, alpha, kernel.row(a, s));
    return {std::move(kernel), DirichletDense{n_states, n_actions, alpha}};
}

// ---------------------------------------------------------------------------
// Mazes

namespace {

struct Offset {
    int dx, dy;
};

Offset offset(Direction d) {
    switch (d) {
        case Direction::Up: return {0, -1};
        case Direction::Down: return {0, 1};
        case Direction::Left: return {-1, 0};
        case Direction::Right: return {1, 0};
    }
    return {0, 0};
}

Direction opposite(Direction d) {
    switch (d) {
        case Direction::Up: return Direction::Down;
        case Direction::Down: return Direction::Up;
        case Direction::Left: return Direction::Right;
        case Direction::Right: return Direction::Left;
    }
    return d;
}

// Canonical wall for (room, dir): internal walls are keyed from the lower room.
Wall canonical_wall(const MazeLayout& layout, StateId room, Direction dir) {
    const int x = room % layout.width, y = room / layout.width;
    const auto [dx, dy] = offset(dir);
    const int nx = x + dx, ny = y + dy;
    if (nx < 0 || ny < 0 || nx >= layout.width || ny >= layout.height) return {room, dir};
    const StateId other = ny * layout.width + nx;
    if (other < room) return {other, opposite(dir)};
    return {room, dir};
}

const char* direction_name(Direction d) {
    switch (d) {
        case Direction::Up: return "up";
        case Direction::Down: return "down";
        case Direction::Left: return "left";
        case Direction::Right: return "right";
    }
    return "?";
}

Direction parse_direction(const std::string& s) {
    for (Direction d : kDirections)
        if (s == direction_name(d)) return d;
    throw std::invalid_argument("unknown direction '" + s + "'");
}

}  // namespace

bool MazeLayout::is_open(StateId room, Direction dir) const {
    const int x = room % width, y = room / width;
    const auto [dx, dy] = offset(dir);
    const int nx = x + dx, ny = y + dy;
    if (nx < 0 || ny < 0 || nx >= width || ny >= height) return false;
    const Wall key = canonical_wall(*this, room, dir);
    return std::find(walls.begin(), walls.end(), key) == walls.end();
}

StateId MazeLayout::move(StateId room, Direction dir) const {
    const Wall key = canonical_wall(*this, room, dir);
    auto it = std::find(walls.begin(), walls.end(), key);
    if (it == walls.end()) {
        const auto [dx, dy] = offset(dir);
        return (room / width + dy) * width + room % width + dx;
    }
    const int wall_index = static_cast<int>(it - walls.begin());
    if (std::find(portals.begin(), portals.end(), wall_index) != portals.end()) return base_state;
    return room;
}

std::vector<StateId> MazeLayout::targets(StateId room) const {
    std::vector<StateId> out;
    for (Direction d : kDirections) {
        const StateId t = move(room, d);
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
}

namespace {

// Wilson's algorithm: loop-erased random walks grown into a uniform spanning tree.
// Returns, for each room, whether the edge toward Right / Down is open.
std::vector<std::array<bool, 4>> wilson_spanning_tree(Rng& rng, int width, int height) {
    const int n = width * height;
    std::vector<char> in_tree(n, 0);
    std::vector<int> exit_dir(n, -1);
    std::vector<std::array<bool, 4>> open(n, {false, false, false, false});
    std::uniform_int_distribution<int> pick_room(0, n - 1);
    std::uniform_int_distribution<int> pick_dir(0, 3);

    in_tree[pick_room(rng)] = 1;
    for (int start = 0; start < n; ++start) {
        if (in_tree[start]) continue;
        int cur = start;
        while (!in_tree[cur]) {
            int d, next;
            for (;;) {
                d = pick_dir(rng);
                const auto [dx, dy] = offset(static_cast<Direction>(d));
                const int nx = cur % width + dx, ny = cur / width + dy;
                if (nx >= 0 && ny >= 0 && nx < width && ny < height) {
                    next = ny * width + nx;
                    break;
                }
            }
            exit_dir[cur] = d;
            cur = next;
        }
        cur = start;
        while (!in_tree[cur]) {
            const auto d = static_cast<Direction>(exit_dir[cur]);
            const auto [dx, dy] = offset(d);
            const int next = (cur / width + dy) * width + cur % width + dx;
            open[cur][static_cast<int>(d)] = true;
            open[next][static_cast<int>(opposite(d))] = true;
            in_tree[cur] = 1;
            cur = next;
        }
    }
    return open;
}

}  // namespace

MazeWorld gen_maze(Rng& rng, int width, int height, int n_portals, double alpha) {
    MazeLayout layout;
    layout.width = width;
    layout.height = height;
    const int n = width * height;

    const auto open = wilson_spanning_tree(rng, width, height);
    for (StateId room = 0; room < n; ++room) {
        const int x = room % width, y = room / width;
        for (Direction d : kDirections) {
            const auto [dx, dy] = offset(d);
            const int nx = x + dx, ny = y + dy;
            const bool boundary = nx < 0 || ny < 0 || nx >= width || ny >= height;
            if (boundary) {
                layout.walls.push_back({room, d});
            } else if (ny * width + nx > room && !open[room][static_cast<int>(d)]) {
                layout.walls.push_back({room, d});
            }
        }
    }

    const int n_walls = static_cast<int>(layout.walls.size());
    if (n_portals > n_walls) throw std::invalid_argument("more portals than walls");
    std::vector<int> wall_ids(n_walls);
    std::iota(wall_ids.begin(), wall_ids.end(), 0);
    std::shuffle(wall_ids.begin(), wall_ids.end(), rng);
    layout.portals.assign(wall_ids.begin(), wall_ids.begin() + n_portals);
    std::sort(layout.portals.begin(), layout.portals.end());

    layout.base_state = std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::shuffle(layout.action_direction.begin(), layout.action_direction.end(), rng);

    const int n_actions = 4;
    TransitionKernel kernel(n, n_actions);
    MazeDirichlet prior{n, n_actions, alpha, {}};
    prior.support.resize(static_cast<std::size_t>(n) * n_actions);
    std::vector<double> weights;
    for (ActionId a = 0; a < n_actions; ++a) {
        const Direction own = layout.action_direction[a];
        for (StateId s = 0; s < n; ++s) {
            const auto targets = layout.targets(s);
            const StateId own_target = layout.move(s, own);
            weights.resize(targets.size());
            draw_dirichlet(rng, alpha, weights);
            // the largest component goes to the action's own direction; the rest are shuffled
            std::sort(weights.begin(), weights.end(), std::greater<>());
            std::shuffle(weights.begin() + 1, weights.end(), rng);
            auto row = kernel.row(a, s);
            std::size_t next_weight = 1;
            for (StateId t : targets) row[t] = (t == own_target) ? weights[0] : weights[next_weight++];
            prior.support[static_cast<std::size_t>(a) * n + s] = targets;
        }
    }
    return {std::move(kernel), std::move(prior), std::move(layout)};
}

// ---------------------------------------------------------------------------
// 1-2-3 worlds

DenseWorld gen_123(Rng& rng, int n_states, int max_attempts) {
    const int n_actions = 3;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<StateId> others(n_states - 1);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        TransitionKernel kernel(n_states, n_actions);
        for (ActionId a = 0; a < n_actions; ++a) {
            const int n_targets = a + 1;
            const double w = 1.0 / n_targets;
            for (StateId s = 0; s < n_states; ++s) {
                std::iota(others.begin(), others.end(), 1);
                std::shuffle(others.begin(), others.end(), rng);
                auto row = kernel.row(a, s);
                int from_others = n_targets;
                if (unit(rng) < absorbing_target_probability(a)) {
                    row[0] = w;
                    --from_others;
                }
                for (int k = 0; k < from_others; ++k) row[others[k]] = w;
            }
        }
        if (is_ergodic(kernel)) return {std::move(kernel), OneTwoThree{n_states, n_actions}};
    }
    throw std::runtime_error("1-2-3 world generation exceeded the resample cap");
}

bool in_one_two_three_support(const TransitionKernel& kernel) {
    if (kernel.n_actions() != 3) return false;
    for (ActionId a = 0; a < 3; ++a) {
        const double w = 1.0 / (a + 1);
        for (StateId s = 0; s < kernel.n_states(); ++s) {
            int hits = 0;
            for (double p : kernel.row(a, s)) {
                if (p == 0.0) continue;
                if (p != w) return false;
                ++hits;
            }
            if (hits != a + 1) return false;
        }
    }
    return true;
}

World generate_world(WorldClass wc, Rng& rng) {
    switch (wc) {
        case WorldClass::Dense: {
            auto w = gen_dense(rng);
            return {wc, std::move(w.kernel), std::move(w.prior), std::nullopt};
        }
        case WorldClass::Maze: {
            auto w = gen_maze(rng);
            return {wc, std::move(w.kernel), std::move(w.prior), std::move(w.layout)};
        }
        case WorldClass::OneTwoThree: {
            auto w = gen_123(rng);
            return {wc, std::move(w.kernel), std::move(w.prior), std::nullopt};
        }
    }
    throw std::invalid_argument("unknown world class");
}

std::string maze_ascii(const MazeLayout& layout) {
    // +--+ grid; portals drawn as '#', base room marked with '*'
    std::ostringstream out;
    auto horizontal = [&](StateId room, Direction d) -> std::string {
        if (layout.is_open(room, d)) return "  ";
        return layout.move(room, d) == layout.base_state && layout.move(room, d) != room ? "##" : "--";
    };
    auto vertical = [&](StateId room, Direction d) -> char {
        if (layout.is_open(room, d)) return ' ';
        return layout.move(room, d) == layout.base_state && layout.move(room, d) != room ? '#' : '|';
    };
    for (int y = 0; y < layout.height; ++y) {
        for (int x = 0; x < layout.width; ++x) out << '+' << horizontal(y * layout.width + x, Direction::Up);
        out << "+\n";
        for (int x = 0; x < layout.width; ++x) {
            const StateId room = y * layout.width + x;
            out << vertical(room, Direction::Left) << (room == layout.base_state ? "<>" : "  ");
        }
        out << vertical(y * layout.width + layout.width - 1, Direction::Right) << '\n';
    }
    for (int x = 0; x < layout.width; ++x)
        out << '+' << horizontal((layout.height - 1) * layout.width + x, Direction::Down);
    out << "+\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Serialization (state ids are 1-based on the wire)

nlohmann::json prior_to_json(const PriorSpec& prior) {
    using nlohmann::json;
    if (const auto* d = std::get_if<DirichletDense>(&prior))
        return {{"kind", "dirichlet_dense"}, {"n_states", d->n_states}, {"n_actions", d->n_actions},
                {"alpha", d->alpha}};
    if (const auto* m = std::get_if<MazeDirichlet>(&prior)) {
        json support = json::array();
        for (const auto& row : m->support) {
            json r = json::array();
            for (StateId s : row) r.push_back(s + 1);
            support.push_back(std::move(r));
        }
        return {{"kind", "maze_dirichlet"}, {"n_states", m->n_states}, {"n_actions", m->n_actions},
                {"alpha", m->alpha}, {"support", std::move(support)}};
    }
    const auto& o = std::get<OneTwoThree>(prior);
    return {{"kind", "one_two_three"}, {"n_states", o.n_states}, {"n_actions", o.n_actions}};
}

PriorSpec prior_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    PriorSpec out;
    if (kind == "dirichlet_dense") {
        out = DirichletDense{j.at("n_states").get<int>(), j.at("n_actions").get<int>(), j.at("alpha").get<double>()};
    } else if (kind == "maze_dirichlet") {
        MazeDirichlet m{j.at("n_states").get<int>(), j.at("n_actions").get<int>(), j.at("alpha").get<double>(), {}};
        for (const auto& row : j.at("support")) {
            std::vector<StateId> r;
            for (const auto& s : row) r.push_back(s.get<int>() - 1);
            m.support.push_back(std::move(r));
        }
        out = std::move(m);
    } else if (kind == "one_two_three") {
        out = OneTwoThree{j.at("n_states").get<int>(), j.at("n_actions").get<int>()};
    } else {
        throw std::invalid_argument("unknown prior kind '" + kind + "'");
    }
    validate_prior(out);
    return out;
}

nlohmann::json world_to_json(const World& world, int world_id) {
    using nlohmann::json;
    json j;
    j["world_class"] = to_string(world.world_class);
    j["world_id"] = world_id;
    j["kernel"] = {{"n_states", world.kernel.n_states()},
                   {"n_actions", world.kernel.n_actions()},
                   {"probs", world.kernel.data()}};
    j["prior"] = prior_to_json(world.prior);
    if (world.layout) {
        const auto& l = *world.layout;
        json walls = json::array();
        for (const auto& w : l.walls) walls.push_back({{"room", w.room + 1}, {"dir", direction_name(w.dir)}});
        json dirs = json::array();
        for (Direction d : l.action_direction) dirs.push_back(direction_name(d));
        j["layout"] = {{"width", l.width},     {"height", l.height},         {"walls", std::move(walls)},
                       {"portals", l.portals}, {"base_state", l.base_state + 1}, {"action_direction", std::move(dirs)}};
    }
    return j;
}

World world_from_json(const nlohmann::json& j) {
    World w;
    w.world_class = parse_world_class(j.at("world_class").get<std::string>());
    const auto& k = j.at("kernel");
    w.kernel = TransitionKernel(k.at("n_states").get<int>(), k.at("n_actions").get<int>(),
                                k.at("probs").get<std::vector<double>>());
    w.prior = prior_from_json(j.at("prior"));
    if (j.contains("layout")) {
        const auto& l = j.at("layout");
        MazeLayout layout;
        layout.width = l.at("width").get<int>();
        layout.height = l.at("height").get<int>();
        for (const auto& wall : l.at("walls"))
            layout.walls.push_back({wall.at("room").get<int>() - 1, parse_direction(wall.at("dir").get<std::string>())});
        layout.portals = l.at("portals").get<std::vector<int>>();
        layout.base_state = l.at("base_state").get<int>() - 1;
        const auto dirs = l.at("action_direction").get<std::vector<std::string>>();
        for (std::size_t a = 0; a < dirs.size() && a < 4; ++a) layout.action_direction[a] = parse_direction(dirs[a]);
        w.layout = std::move(layout);
    }
    return w;
}

}  // namespace cmc
