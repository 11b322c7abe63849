#include "mdpsift/builtin.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mdpsift {

std::vector<double> medical_thresholds(ThresholdVariant variant) {
    switch (variant) {
        case ThresholdVariant::a: return {0.8, 0.7};
        case ThresholdVariant::b: return {0.9, 0.8};
        case ThresholdVariant::c: return {0.95, 0.9};
    }
    throw std::invalid_argument("medical_thresholds: unknown variant");
}

BuiltinProblem builtin_medical(ThresholdVariant variant) {
    BuiltinProblem problem;
    ModelFamily& f = problem.family;
    f.num_states = 3;
    f.num_actions = 3;
    f.num_models = 2;
    f.initial_state = 0;
    f.initial_prior = {0.5, 0.5};
    f.labels.states = {"s1", "s2", "s3"};
    f.labels.actions = {"treatment1", "treatment2", "observe"};
    f.labels.models = {"disease1", "disease2"};

    // transitions[model][state][action][next_state]; s3 is absorbing.
    f.transitions = {
        {
            {{0.8, 0.2, 0.0}, {0.6, 0.4, 0.0}, {0.5, 0.5, 0.0}},
            {{0.7, 0.2, 0.1}, {0.2, 0.4, 0.4}, {0.1, 0.6, 0.3}},
            {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}},
        },
        {
            {{0.6, 0.4, 0.0}, {0.9, 0.1, 0.0}, {0.3, 0.7, 0.0}},
            {{0.1, 0.5, 0.4}, {0.8, 0.1, 0.1}, {0.1, 0.3, 0.6}},
            {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}},
        },
    };
    f.costs = {{2, 5, 0}, {6, 4, 0}, {7, 7, 0}};

    problem.spec.thresholds = medical_thresholds(variant);
    problem.budget.horizon = 6;
    problem.budget.cost_bound = 10;
    return problem;
}

std::set<int> medical_safe_states() { return {0, 1}; }

namespace {

bool in_bounds(const GridLayout& layout, Cell c) {
    return c.row >= 0 && c.row < layout.height && c.col >= 0 && c.col < layout.width;
}

bool is_obstacle(const GridLayout& layout, Cell c) { return layout.obstacles.count(c) > 0; }

std::vector<Cell> valid_neighbors(const GridLayout& layout, Cell c) {
    // Fixed scan order (up, down, left, right) keeps construction deterministic.
    const Cell candidates[4] = {{c.row - 1, c.col}, {c.row + 1, c.col}, {c.row, c.col - 1}, {c.row, c.col + 1}};
    std::vector<Cell> out;
    for (const Cell& n : candidates)
        if (in_bounds(layout, n) && !is_obstacle(layout, n)) out.push_back(n);
    return out;
}

// Moves available from a cell: the valid neighbors, plus staying put when the
// cell has fewer than two of them, so every row stays stochastic and the
// hostile bias split has something to work with.
std::vector<Cell> moves_from(const GridLayout& layout, Cell c) {
    std::vector<Cell> moves = valid_neighbors(layout, c);
    if (moves.size() < 2) moves.push_back(c);
    return moves;
}

// Multi-source BFS distance to `targets` over non-obstacle cells; -1 where
// the targets are unreachable.
std::map<Cell, int> bfs_distance(const GridLayout& layout, const std::set<Cell>& targets) {
    std::map<Cell, int> dist;
    std::deque<Cell> frontier;
    for (const Cell& t : targets) {
        if (!in_bounds(layout, t) || is_obstacle(layout, t)) continue;
        dist[t] = 0;
        frontier.push_back(t);
    }
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop_front();
        for (const Cell& n : valid_neighbors(layout, c)) {
            if (dist.count(n)) continue;
            dist[n] = dist[c] + 1;
            frontier.push_back(n);
        }
    }
    return dist;
}

std::vector<Violation> validate_layout(const GridLayout& layout) {
    std::vector<Violation> out;
    if (layout.width < 1 || layout.height < 1) out.push_back({"grid dimensions must be positive"});
    if (!(layout.bias >= 0.0 && layout.bias <= 1.0)) out.push_back({"bias must lie in [0,1]"});
    if (!in_bounds(layout, layout.start) || is_obstacle(layout, layout.start))
        out.push_back({"start cell missing or blocked"});
    for (const Cell& c : layout.sensitive)
        if (is_obstacle(layout, c)) out.push_back({"sensitive cell is also an obstacle"});
    for (const Cell& c : layout.hiding)
        if (is_obstacle(layout, c)) out.push_back({"hiding cell is also an obstacle"});
    return out;
}

}  // namespace

int gridworld_state_of(const GridLayout& layout, Cell cell) {
    if (!in_bounds(layout, cell) || is_obstacle(layout, cell)) return -1;
    int index = 0;
    for (int r = 0; r < layout.height; ++r)
        for (int c = 0; c < layout.width; ++c) {
            const Cell here{r, c};
            if (is_obstacle(layout, here)) continue;
            if (here == cell) return index;
            ++index;
        }
    return -1;
}

BuiltinProblem builtin_gridworld(const GridLayout& layout) {
    const auto layout_violations = validate_layout(layout);
    if (!layout_violations.empty())
        throw std::invalid_argument("builtin_gridworld: " + format_violations(layout_violations));

    // Dense state index over non-obstacle cells in row-major order.
    std::vector<Cell> cells;
    for (int r = 0; r < layout.height; ++r)
        for (int c = 0; c < layout.width; ++c)
            if (!is_obstacle(layout, {r, c})) cells.push_back({r, c});
    const int n = static_cast<int>(cells.size());
    std::map<Cell, int> state_of;
    for (int s = 0; s < n; ++s) state_of[cells[static_cast<std::size_t>(s)]] = s;

    for (const Cell& c : cells)
        if (valid_neighbors(layout, c).empty())
            throw std::invalid_argument("builtin_gridworld: cell (" + std::to_string(c.row) + "," +
                                        std::to_string(c.col) + ") has no valid move");

    const auto dist_sensitive = bfs_distance(layout, layout.sensitive);
    const auto dist_hiding = bfs_distance(layout, layout.hiding);

    // Hostile row: mass `bias` split over moves that reduce the BFS distance
    // to the target region, remainder uniform over the other moves; uniform
    // over all moves when either side is empty (already there, or target
    // unreachable).
    auto hostile_row = [&](Cell from, const std::map<Cell, int>& dist) {
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        const std::vector<Cell> moves = moves_from(layout, from);
        std::vector<Cell> reducing;
        std::vector<Cell> other;
        const auto here = dist.find(from);
        for (const Cell& m : moves) {
            const auto there = dist.find(m);
            const bool reduces =
                here != dist.end() && there != dist.end() && there->second < here->second;
            (reduces ? reducing : other).push_back(m);
        }
        if (reducing.empty() || other.empty()) {
            for (const Cell& m : moves)
                row[static_cast<std::size_t>(state_of.at(m))] += 1.0 / static_cast<double>(moves.size());
        } else {
            for (const Cell& m : reducing)
                row[static_cast<std::size_t>(state_of.at(m))] +=
                    layout.bias / static_cast<double>(reducing.size());
            for (const Cell& m : other)
                row[static_cast<std::size_t>(state_of.at(m))] +=
                    (1.0 - layout.bias) / static_cast<double>(other.size());
        }
        return row;
    };

    auto uniform_row = [&](Cell from) {
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        const std::vector<Cell> moves = moves_from(layout, from);
        for (const Cell& m : moves)
            row[static_cast<std::size_t>(state_of.at(m))] += 1.0 / static_cast<double>(moves.size());
        return row;
    };

    BuiltinProblem problem;
    ModelFamily& f = problem.family;
    f.num_states = n;
    f.num_actions = 2;
    f.num_models = 2;
    f.initial_state = state_of.at(layout.start);
    f.initial_prior = {0.5, 0.5};
    f.labels.actions = {"observe", "alarm"};
    f.labels.models = {"hostile", "animal"};
    f.labels.states.reserve(cells.size());
    for (const Cell& c : cells)
        f.labels.states.push_back("(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")");

    f.transitions.assign(2, std::vector<std::vector<std::vector<double>>>(
                                static_cast<std::size_t>(n),
                                std::vector<std::vector<double>>(2)));
    for (int s = 0; s < n; ++s) {
        const Cell from = cells[static_cast<std::size_t>(s)];
        f.transitions[0][static_cast<std::size_t>(s)][0] = hostile_row(from, dist_sensitive);
        f.transitions[0][static_cast<std::size_t>(s)][1] = hostile_row(from, dist_hiding);
        f.transitions[1][static_cast<std::size_t>(s)][0] = uniform_row(from);
        f.transitions[1][static_cast<std::size_t>(s)][1] = uniform_row(from);
    }

    f.costs.assign(static_cast<std::size_t>(n), {1, 3});

    problem.spec.thresholds = {0.7, 0.7};
    std::set<int> safe;
    for (int s = 0; s < n; ++s)
        if (layout.sensitive.count(cells[static_cast<std::size_t>(s)]) == 0) safe.insert(s);
    problem.spec.safe_states = safe;
    problem.budget.horizon = 6;
    problem.budget.cost_bound = 8;
    return problem;
}

GridLayout parse_grid_layout(const std::string& text) {
    GridLayout layout;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> rows;
    bool saw_start = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("bias=", 0) == 0) {
            try {
                layout.bias = std::stod(line.substr(5));
            } catch (const std::exception&) {
                throw std::invalid_argument("parse_grid_layout: malformed bias line '" + line + "'");
            }
            continue;
        }
        rows.push_back(line);
    }
    if (rows.empty()) throw std::invalid_argument("parse_grid_layout: no grid rows");
    layout.height = static_cast<int>(rows.size());
    layout.width = static_cast<int>(rows.front().size());
    for (int r = 0; r < layout.height; ++r) {
        if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != layout.width)
            throw std::invalid_argument("parse_grid_layout: ragged row " + std::to_string(r));
        for (int c = 0; c < layout.width; ++c) {
            const Cell cell{r, c};
            switch (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) {
                case '.': break;
                case '#': layout.obstacles.insert(cell); break;
                case 'G': layout.sensitive.insert(cell); break;
                case 'Y': layout.hiding.insert(cell); break;
                case 'S':
                    if (saw_start) throw std::invalid_argument("parse_grid_layout: multiple start cells");
                    layout.start = cell;
                    saw_start = true;
                    break;
                default:
                    throw std::invalid_argument(std::string("parse_grid_layout: unknown character '") +
                                                rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +
                                                "' at row " + std::to_string(r) + " col " + std::to_string(c));
            }
        }
    }
    if (!saw_start) throw std::invalid_argument("parse_grid_layout: missing start cell 'S'");
    return layout;
}

std::string format_grid_layout(const GridLayout& layout) {
    std::ostringstream os;
    os << "bias=" << layout.bias << "\n";
    for (int r = 0; r < layout.height; ++r) {
        for (int c = 0; c < layout.width; ++c) {
            const Cell cell{r, c};
            char ch = '.';
            if (layout.obstacles.count(cell)) ch = '#';
            else if (layout.sensitive.count(cell)) ch = 'G';
            else if (layout.hiding.count(cell)) ch = 'Y';
            else if (cell == layout.start) ch = 'S';
            os << ch;
        }
        os << "\n";
    }
    return os.str();
}

namespace {

constexpr const char* kDefaultGrid =
    "bias=0.7\n"
    "........\n"
    ".##.....\n"
    ".#...#GG\n"
    ".#...#.G\n"
    ".....#..\n"
    "##......\n"
    "Y...#...\n"
    "S...#...\n";

}  // namespace

GridLayout default_grid_layout() { return parse_grid_layout(kDefaultGrid); }

}  // namespace mdpsift
