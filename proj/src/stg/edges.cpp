#include "trajcast/stg/edges.hpp"

#include <algorithm>

namespace trajcast::stg {

using diff::LstmState;
using diff::Shape;
using diff::Tape;
using diff::Var;

EdgeEncoders::EdgeEncoders(diff::ParamStore& ps, const std::string& name, int hidden)
    : hidden_(hidden) {
    cells_[0] = diff::LstmCell(ps, name + ".pedestrian", 4, hidden);
    cells_[1] = diff::LstmCell(ps, name + ".vehicle", 4, hidden);
    cells_[2] = diff::LstmCell(ps, name + ".robot", 4, hidden);
}

namespace {

// neighbor id of an edge incident to focus, or -1
int incident_neighbor(const Edge& e, int focus_id) {
    if (e.u == focus_id) return e.v;
    if (e.v == focus_id) return e.u;
    return -1;
}

}  // namespace

Var EdgeEncoders::encode(Tape& t, std::span<const SceneGraph> history, int focus_id,
                         const FeatureScales& fs) const {
    if (history.empty()) throw InputError("encode_edges: empty graph history");
    struct Live {
        LstmState s;
        AgentType type;
    };
    std::map<int, Live> live;

    for (const auto& g : history) {
        const AgentState* focus = g.node(focus_id);
        if (focus == nullptr) throw InputError("encode_edges: focus agent missing from graph");
        // drop states whose registry entry disappeared
        for (auto it = live.begin(); it != live.end();) {
            if (g.edge(focus_id, it->first) == nullptr)
                it = live.erase(it);
            else
                ++it;
        }
        for (const auto& e : g.edges) {
            const int nb_id = incident_neighbor(e, focus_id);
            if (nb_id < 0) continue;
            const AgentState* nb = g.node(nb_id);
            if (nb == nullptr) continue;  // absent endpoint: entry fading, no observation
            auto it = live.find(nb_id);
            if (it == live.end()) {
                Live fresh{cell_for(nb->type).zero_state(t, 1), nb->type};
                it = live.emplace(nb_id, fresh).first;
            }
            const auto f = edge_features(*focus, *nb, fs);
            it->second.s = cell_for(it->second.type).step(t, t.constant(Shape{1, 4}, f), it->second.s);
        }
    }

    // modulated sum within type class, concatenated across classes
    const SceneGraph& last = history.back();
    std::array<Var, kAgentTypeCount> agg;
    for (int k = 0; k < kAgentTypeCount; ++k) agg[static_cast<size_t>(k)] = t.constant(Shape{1, hidden_}, 0.0);
    for (const auto& [nb_id, lv] : live) {
        const Edge* e = last.edge(focus_id, nb_id);
        if (e == nullptr) continue;
        const auto k = static_cast<size_t>(lv.type);
        agg[k] = t.add(agg[k], t.scale(lv.s.h, e->modulation));
    }
    return t.concat_cols(agg);
}

void EdgeEncoders::advance(State& st, const SceneGraph& g, int focus_id,
                           const FeatureScales& fs) const {
    const AgentState* focus = g.node(focus_id);
    if (focus == nullptr) throw InputError("edge advance: focus agent missing");
    for (auto it = st.by_neighbor.begin(); it != st.by_neighbor.end();) {
        if (g.edge(focus_id, it->first) == nullptr)
            it = st.by_neighbor.erase(it);
        else
            ++it;
    }
    for (const auto& e : g.edges) {
        const int nb_id = incident_neighbor(e, focus_id);
        if (nb_id < 0) continue;
        const AgentState* nb = g.node(nb_id);
        if (nb == nullptr) continue;
        auto& hc = st.by_neighbor[nb_id];
        if (hc.h.empty()) {
            hc.h.assign(static_cast<size_t>(hidden_), 0.0);
            hc.c.assign(static_cast<size_t>(hidden_), 0.0);
            hc.type = nb->type;
        }
        const auto f = edge_features(*focus, *nb, fs);
        cell_for(hc.type).step_values(f, hc.h, hc.c);
    }
}

std::vector<double> EdgeEncoders::aggregate(const State& st, const SceneGraph& g,
                                            int focus_id) const {
    std::vector<double> out(static_cast<size_t>(aggregate_size()), 0.0);
    for (const auto& [nb_id, hc] : st.by_neighbor) {
        const Edge* e = g.edge(focus_id, nb_id);
        if (e == nullptr || hc.h.empty()) continue;
        double* dst = out.data() + static_cast<size_t>(hc.type) * hidden_;
        for (int j = 0; j < hidden_; ++j)
            dst[static_cast<size_t>(j)] += e->modulation * hc.h[static_cast<size_t>(j)];
    }
    return out;
}

}  // namespace trajcast::stg
