#include "trajcast/stg/graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace trajcast::stg {

namespace {

std::vector<AgentState> sorted_nodes(std::span<const AgentState> states) {
    std::vector<AgentState> nodes(states.begin(), states.end());
    std::sort(nodes.begin(), nodes.end(),
              [](const AgentState& a, const AgentState& b) { return a.agent_id < b.agent_id; });
    for (size_t i = 1; i < nodes.size(); ++i)
        if (nodes[i].agent_id == nodes[i - 1].agent_id)
            throw InputError("duplicate agent id " + std::to_string(nodes[i].agent_id));
    return nodes;
}

bool within_threshold(const AgentState& a, const AgentState& b, const Thresholds& d) {
    return dist(a.pos, b.pos) <= d.between(a.type, b.type);
}

}  // namespace

SceneGraph build_graph(std::span<const AgentState> states, int t, const Thresholds& d,
                       int ramp_window) {
    if (d.ped_ped <= 0.0 || d.vehicle <= 0.0) throw InputError("distance threshold must be positive");
    if (ramp_window < 1) throw InputError("ramp window must be >= 1");
    SceneGraph g;
    g.t = t;
    g.ramp_window = ramp_window;
    g.nodes = sorted_nodes(states);
    const double step = 1.0 / ramp_window;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        for (size_t j = i + 1; j < g.nodes.size(); ++j) {
            if (within_threshold(g.nodes[i], g.nodes[j], d)) {
                Edge e;
                e.u = g.nodes[i].agent_id;
                e.v = g.nodes[j].agent_id;
                e.active = true;
                e.modulation = std::min(1.0, step);
                e.age = 1;
                g.edges.push_back(e);
            }
        }
    }
    return g;
}

SceneGraph update_graph(const SceneGraph& prev, std::span<const AgentState> states,
                        const Thresholds& d) {
    SceneGraph g;
    g.t = prev.t + 1;
    g.ramp_window = prev.ramp_window;
    g.nodes = sorted_nodes(states);
    const double step = 1.0 / prev.ramp_window;

    std::map<std::pair<int, int>, Edge> reg;
    for (const auto& e : prev.edges) reg[{e.u, e.v}] = e;

    // pairs present now
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        for (size_t j = i + 1; j < g.nodes.size(); ++j) {
            const auto key = std::make_pair(g.nodes[i].agent_id, g.nodes[j].agent_id);
            const bool cond = within_threshold(g.nodes[i], g.nodes[j], d);
            auto it = reg.find(key);
            if (it == reg.end()) {
                if (cond) {
                    Edge e;
                    e.u = key.first;
                    e.v = key.second;
                    e.active = true;
                    e.modulation = std::min(1.0, step);
                    e.age = 1;
                    g.edges.push_back(e);
                }
                continue;
            }
            Edge e = it->second;
            reg.erase(it);
            e.age += 1;
            e.missing = 0;
            e.active = cond;
            if (cond) {
                e.modulation = std::min(1.0, e.modulation + step);
                g.edges.push_back(e);
            } else {
                e.modulation = std::max(0.0, e.modulation - step);
                if (e.modulation > 0.0) g.edges.push_back(e);  // dropped at 0
            }
        }
    }

    // entries whose endpoint is absent this update: fade, allow a
    // one-step gap, reset on the second consecutive absence
    for (auto& [key, e] : reg) {
        e.age += 1;
        e.missing += 1;
        e.active = false;
        e.modulation = std::max(0.0, e.modulation - step);
        if (e.missing < 2) g.edges.push_back(e);
    }

    std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
        return std::make_pair(a.u, a.v) < std::make_pair(b.u, b.v);
    });
    return g;
}

std::string SceneGraph::dump() const {
    std::ostringstream os;
    os << "graph t=" << t << " nodes=" << nodes.size() << " edges=" << edges.size() << "\n";
    for (const auto& n : nodes)
        os << "  node " << n.agent_id << " " << to_string(n.type) << " p=(" << n.pos[0] << ","
           << n.pos[1] << ")\n";
    for (const auto& e : edges)
        os << "  edge (" << e.u << "," << e.v << ")" << (e.active ? "" : " fading") << " mod="
           << e.modulation << " age=" << e.age << "\n";
    return os.str();
}

}  // namespace trajcast::stg
