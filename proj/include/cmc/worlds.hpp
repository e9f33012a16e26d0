#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cmc/kernel.hpp"

namespace cmc {

enum class WorldClass { Dense, Maze, OneTwoThree };

std::string to_string(WorldClass wc);
WorldClass parse_world_class(const std::string& name);

struct DirichletDense {
    int n_states = 10;
    int n_actions = 4;
    double alpha = 1.0;
};

/// Dirichlet prior restricted to a per-row support; support[a * N + s] lists admissible next states.
struct MazeDirichlet {
    int n_states = 36;
    int n_actions = 4;
    double alpha = 0.25;
    std::vector<std::vector<StateId>> support;
};

/// Discrete prior where action a (0-based) moves uniformly to a+1 targets; state 0 is favoured.
struct OneTwoThree {
    int n_states = 20;
    int n_actions = 3;
};

using PriorSpec = std::variant<DirichletDense, MazeDirichlet, OneTwoThree>;

int prior_states(const PriorSpec& prior);
int prior_actions(const PriorSpec& prior);

/// Throws std::invalid_argument if the prior's invariants fail.
void validate_prior(const PriorSpec& prior);

/// Probability that state 0 is one of the targets of (0-based) action a: 1 - 0.75^(a+1).
double absorbing_target_probability(ActionId a);

enum class Direction { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down, Direction::Left,
                                                      Direction::Right};

/// One wall segment, identified by the room it borders and the direction it faces.
/// Internal walls are stored once, from the lower-indexed room (facing Right or Down).
struct Wall {
    StateId room = 0;
    Direction dir = Direction::Up;
    bool operator==(const Wall&) const = default;
};

struct MazeLayout {
    int width = 6;
    int height = 6;
    std::vector<Wall> walls;
    std::vector<int> portals;  ///< indices into walls
    StateId base_state = 0;
    std::array<Direction, 4> action_direction{Direction::Up, Direction::Down, Direction::Left,
                                              Direction::Right};

    int n_rooms() const { return width * height; }
    /// Room reached by one translation from `room` toward `dir`: neighbour, base state, or the room itself.
    StateId move(StateId room, Direction dir) const;
    bool is_open(StateId room, Direction dir) const;
    /// Distinct outcomes of the four translations from `room`, in direction order.
    std::vector<StateId> targets(StateId room) const;
};

struct DenseWorld {
    TransitionKernel kernel;
    PriorSpec prior;
};

struct MazeWorld {
    TransitionKernel kernel;
    PriorSpec prior;
    MazeLayout layout;
};

DenseWorld gen_dense(Rng& rng, int n_states = 10, int n_actions = 4, double alpha = 1.0);

/// Perfect 6x6 maze (Wilson's uniform spanning tree), 30 portals among the walls.
MazeWorld gen_maze(Rng& rng, int width = 6, int height = 6, int n_portals = 30, double alpha = 0.25);

/// Throws std::runtime_error when `max_attempts` draws all fail the ergodicity test.
DenseWorld gen_123(Rng& rng, int n_states = 20, int max_attempts = 10000);

/// True iff every row of action a has exactly a+1 entries equal to 1/(a+1) and zeros elsewhere.
bool in_one_two_three_support(const TransitionKernel& kernel);

/// Ground truth + prior + optional layout, as produced by the generators.
struct World {
    WorldClass world_class = WorldClass::Dense;
    TransitionKernel kernel;
    PriorSpec prior;
    std::optional<MazeLayout> layout;
};

World generate_world(WorldClass wc, Rng& rng);

/// Fills `out` with one Dirichlet(alpha, ..., alpha) draw.
void draw_dirichlet(Rng& rng, double alpha, std::span<double> out);

std::string maze_ascii(const MazeLayout& layout);

nlohmann::json prior_to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const nlohmann::json& j);
/// State ids in bundles are 1-based.
nlohmann::json world_to_json(const World& world, int world_id);
World world_from_json(const nlohmann::json& j);

}  // namespace cmc
