#pragma once

#include <set>
#include <string>
#include <tuple>
#include <utility>

#include "mdpsift/model.hpp"

namespace mdpsift {

struct BuiltinProblem {
    ModelFamily family;
    DecisionSpec spec;
    BudgetSpec budget;
};

// Confidence-threshold variants of the diagnosis builtin: a=(0.8,0.7),
// b=(0.9,0.8), c=(0.95,0.9).
enum class ThresholdVariant { a, b, c };

std::vector<double> medical_thresholds(ThresholdVariant variant);

// Two-disease staging model: 3 stages, treatments a1/a2 plus a free observe
// action, cost bound 10, prior (0.5, 0.5) at stage s1.  The default horizon
// is 6 (configuration, not intrinsic to the model).
BuiltinProblem builtin_medical(ThresholdVariant variant = ThresholdVariant::a);

// Safe region for the reach-avoid variant of the diagnosis problem: every
// stage except the terminal late stage s3.
std::set<int> medical_safe_states();

struct Cell {
    int row = 0;
    int col = 0;

    auto operator<=>(const Cell& other) const = default;
};

// Surveillance grid: obstacles block movement, sensitive cells are the
// hostile intruder's target (and the unsafe region), the hiding cell is where
// it retreats when an alarm sounds, start is the intruder's initial cell.
// bias is the probability mass the hostile model puts on moves that reduce
// its distance to the current target.
struct GridLayout {
    int width = 0;
    int height = 0;
    std::set<Cell> obstacles;
    std::set<Cell> sensitive;
    std::set<Cell> hiding;
    Cell start;
    double bias = 0.7;
};

// Parses the compact ASCII grid format: optional "bias=<value>" header line,
// then one row per line with '.' free, '#' obstacle, 'G' sensitive,
// 'Y' hiding, 'S' start.  Throws std::invalid_argument on malformed input.
GridLayout parse_grid_layout(const std::string& text);

std::string format_grid_layout(const GridLayout& layout);

// The 8x8 layout shipped with the project (same content as the data file).
GridLayout default_grid_layout();

// Intruder-classification family over the layout: states are the non-obstacle
// cells, action 0 observes (cost 1), action 1 sounds an alarm (cost 3).
// Model 0 (hostile) biases its movement toward the sensitive region under
// observation and toward the hiding cell under an alarm; model 1 (animal)
// moves uniformly.  Thresholds (0.7, 0.7), safe region = non-sensitive cells,
// horizon 6, cost bound 8.
BuiltinProblem builtin_gridworld(const GridLayout& layout);

// Dense state index of a cell in the gridworld family, -1 for obstacles.
int gridworld_state_of(const GridLayout& layout, Cell cell);

}  // namespace mdpsift
