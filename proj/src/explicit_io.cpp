#include "mdpsift/explicit_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mdpsift/io.hpp"

namespace mdpsift {

namespace {

const char* kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::interior: return "interior";
        case NodeKind::goal: return "goal";
        case NodeKind::unsafe_region: return "unsafe";
    }
    return "unknown";
}

NodeKind kind_from_name(const std::string& name) {
    if (name == "interior") return NodeKind::interior;
    if (name == "goal") return NodeKind::goal;
    if (name == "unsafe") return NodeKind::unsafe_region;
    throw std::invalid_argument("explicit import: unknown node kind '" + name + "'");
}

std::string fmt17(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

}  // namespace

void export_explicit(const UnfoldedMdp& mdp, const std::string& prefix) {
    const int belief_len =
        mdp.nodes.empty() ? 0 : static_cast<int>(mdp.nodes.front().belief.size());

    std::ostringstream sta;
    sta << "# states: id state belief[" << belief_len << "] cost kind\n";
    for (int id = 0; id < mdp.node_count(); ++id) {
        const BeliefNode& node = mdp.nodes[static_cast<std::size_t>(id)];
        sta << id << " " << node.state;
        for (double b : node.belief) sta << " " << fmt17(b);
        sta << " " << node.cost << " " << kind_name(mdp.kind[static_cast<std::size_t>(id)]) << "\n";
    }
    write_text_file(prefix + ".sta", sta.str());

    std::ostringstream tra;
    tra << "# transitions: source action target probability\n";
    for (int id = 0; id < mdp.node_count(); ++id)
        for (int a = 0; a < mdp.num_actions; ++a)
            for (const Edge& e : mdp.edges[static_cast<std::size_t>(id)][static_cast<std::size_t>(a)])
                tra << id << " " << a << " " << e.target << " " << fmt17(e.prob) << "\n";
    write_text_file(prefix + ".tra", tra.str());

    std::ostringstream lab;
    lab << "# labels: id label\n";
    for (int id = 0; id < mdp.node_count(); ++id) {
        const NodeKind kind = mdp.kind[static_cast<std::size_t>(id)];
        if (kind != NodeKind::interior)
            lab << id << " " << kind_name(kind) << "\n";
    }
    write_text_file(prefix + ".lab", lab.str());
}

UnfoldedMdp import_explicit(const std::string& prefix) {
    UnfoldedMdp mdp;
    mdp.root = 0;

    {
        std::istringstream in(read_text_file(prefix + ".sta"));
        std::string line;
        int expected_id = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line.front() == '#') continue;
            std::istringstream fields(line);
            std::vector<std::string> tokens;
            std::string token;
            while (fields >> token) tokens.push_back(token);
            if (tokens.size() < 5)
                throw std::invalid_argument("explicit import: malformed state line '" + line + "'");
            const int id = std::stoi(tokens[0]);
            if (id != expected_id)
                throw std::invalid_argument("explicit import: state ids must be dense and ordered");
            ++expected_id;
            BeliefNode node;
            node.state = std::stoi(tokens[1]);
            const std::size_t belief_len = tokens.size() - 4;
            for (std::size_t i = 0; i < belief_len; ++i)
                node.belief.push_back(std::stod(tokens[2 + i]));
            node.cost = std::stoll(tokens[tokens.size() - 2]);
            mdp.kind.push_back(kind_from_name(tokens.back()));
            mdp.keys.push_back(make_key(node));
            mdp.index.emplace(mdp.keys.back(), id);
            mdp.nodes.push_back(std::move(node));
            mdp.depth_first_seen.push_back(0);
        }
    }

    struct Row {
        int source;
        int action;
        int target;
        double prob;
    };
    std::vector<Row> rows;
    int max_action = -1;
    {
        std::istringstream in(read_text_file(prefix + ".tra"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line.front() == '#') continue;
            std::istringstream fields(line);
            Row row{};
            if (!(fields >> row.source >> row.action >> row.target >> row.prob))
                throw std::invalid_argument("explicit import: malformed transition line '" + line + "'");
            if (row.source < 0 || row.source >= mdp.node_count() || row.target < 0 ||
                row.target >= mdp.node_count() || row.action < 0)
                throw std::invalid_argument("explicit import: transition index out of range in '" + line + "'");
            max_action = std::max(max_action, row.action);
            rows.push_back(row);
        }
    }
    mdp.num_actions = max_action + 1;
    mdp.edges.assign(static_cast<std::size_t>(mdp.node_count()),
                     std::vector<std::vector<Edge>>(static_cast<std::size_t>(mdp.num_actions)));
    for (const Row& row : rows)
        mdp.edges[static_cast<std::size_t>(row.source)][static_cast<std::size_t>(row.action)].push_back(
            Edge{row.target, row.prob});

    mdp.expanded.assign(static_cast<std::size_t>(mdp.node_count()), 0);
    for (int id = 0; id < mdp.node_count(); ++id)
        for (int a = 0; a < mdp.num_actions; ++a)
            if (!mdp.edges[static_cast<std::size_t>(id)][static_cast<std::size_t>(a)].empty())
                mdp.expanded[static_cast<std::size_t>(id)] = 1;

    // The labels file restates the non-interior kinds; cross-check it.
    {
        std::istringstream in(read_text_file(prefix + ".lab"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line.front() == '#') continue;
            std::istringstream fields(line);
            int id = 0;
            std::string label;
            if (!(fields >> id >> label))
                throw std::invalid_argument("explicit import: malformed label line '" + line + "'");
            if (id < 0 || id >= mdp.node_count())
                throw std::invalid_argument("explicit import: label id out of range in '" + line + "'");
            if (mdp.kind[static_cast<std::size_t>(id)] != kind_from_name(label))
                throw std::invalid_argument("explicit import: label disagrees with state kind in '" + line + "'");
            if (kind_from_name(label) == NodeKind::unsafe_region) mdp.reach_avoid = true;
        }
    }

    return mdp;
}

}  // namespace mdpsift
