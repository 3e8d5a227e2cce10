#include "trajcast/io/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace trajcast::io {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void fail(int lineno, const std::string& what) {
    throw InputError("dataset line " + std::to_string(lineno) + ": " + what);
}

double parse_double(const std::string& tok, int lineno, const char* what) {
    try {
        size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        fail(lineno, std::string("bad ") + what + ": '" + tok + "'");
    }
}

int parse_int(const std::string& tok, int lineno, const char* what) {
    try {
        size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        fail(lineno, std::string("bad ") + what + ": '" + tok + "'");
    }
}

}  // namespace

std::string dataset_to_string(const Dataset& ds, const std::string& runconfig_hash) {
    std::string out = "#trajcast-dataset v1 dt=" + fmt_double(ds.dt) + " runconfig=" +
                      runconfig_hash + "\n";
    out += "# scene t agent type x y vx vy heading label\n";
    for (const auto& scene : ds.scenes) {
        const int t_max = scene.max_t();
        for (int t = 0; t <= t_max; ++t) {
            for (const auto& tr : scene.tracks) {
                if (!tr.present_at(t)) continue;
                const AgentState& s = tr.at(t);
                out += std::to_string(scene.scene_id) + " " + std::to_string(t) + " " +
                       std::to_string(tr.agent_id) + " " + to_string(tr.type) + " " +
                       fmt_double(s.pos[0]) + " " + fmt_double(s.pos[1]) + " " +
                       fmt_double(s.vel[0]) + " " + fmt_double(s.vel[1]) + " " +
                       (s.has_heading() ? fmt_double(s.heading) : std::string("-")) + " " +
                       (scene.label.empty() ? std::string("-") : scene.label) + "\n";
            }
        }
    }
    return out;
}

Dataset dataset_from_string(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;

    if (!std::getline(is, line)) throw InputError("dataset: empty file");
    ++lineno;
    Dataset ds;
    {
        std::istringstream hs(line);
        std::string magic, vers, dt_tok, rc_tok;
        hs >> magic >> vers >> dt_tok >> rc_tok;
        if (magic != "#trajcast-dataset" || vers != "v1")
            fail(lineno, "not a trajcast dataset header (format version unsupported or missing)");
        if (dt_tok.rfind("dt=", 0) != 0) fail(lineno, "header missing dt=");
        ds.dt = parse_double(dt_tok.substr(3), lineno, "dt");
        if (!(ds.dt > 0.0)) fail(lineno, "dt must be positive");
    }

    struct Key {
        int scene, t, agent;
    };
    std::optional<Key> prev;
    std::map<int, Scene> scenes;  // ordered by id
    std::map<std::pair<int, int>, AgentTrack> tracks;

    while (std::getline(is, line)) {
        ++lineno;
        const std::string trimmed = line;
        if (trimmed.empty()) fail(lineno, "blank line inside record block");
        if (trimmed[0] == '#') continue;
        std::istringstream ls(trimmed);
        std::string s_scene, s_t, s_agent, s_type, s_x, s_y, s_vx, s_vy, s_heading, s_label, extra;
        if (!(ls >> s_scene >> s_t >> s_agent >> s_type >> s_x >> s_y >> s_vx >> s_vy >> s_heading >>
              s_label))
            fail(lineno, "expected 10 fields: scene t agent type x y vx vy heading label");
        if (ls >> extra) fail(lineno, "trailing fields after label");

        AgentState st;
        const int scene_id = parse_int(s_scene, lineno, "scene id");
        st.t = parse_int(s_t, lineno, "timestep");
        st.agent_id = parse_int(s_agent, lineno, "agent id");
        const auto type = agent_type_from_string(s_type);
        if (!type) fail(lineno, "unknown agent type '" + s_type + "'");
        st.type = *type;
        st.pos = {parse_double(s_x, lineno, "x"), parse_double(s_y, lineno, "y")};
        st.vel = {parse_double(s_vx, lineno, "vx"), parse_double(s_vy, lineno, "vy")};
        if (s_heading != "-") st.heading = parse_double(s_heading, lineno, "heading");
        if (!std::isfinite(st.pos[0]) || !std::isfinite(st.pos[1]) || !std::isfinite(st.vel[0]) ||
            !std::isfinite(st.vel[1]))
            fail(lineno, "non-finite state value");

        if (prev) {
            const bool ordered = std::tie(prev->scene, prev->t, prev->agent) <
                                 std::tie(scene_id, st.t, st.agent_id);
            if (!ordered) fail(lineno, "records not sorted by (scene, timestep, agent)");
        }
        prev = Key{scene_id, st.t, st.agent_id};

        Scene& scene = scenes[scene_id];
        scene.scene_id = scene_id;
        if (s_label != "-") {
            if (!scene.label.empty() && scene.label != s_label)
                fail(lineno, "conflicting scene labels");
            scene.label = s_label;
        }
        auto& tr = tracks[{scene_id, st.agent_id}];
        if (tr.states.empty()) {
            tr.agent_id = st.agent_id;
            tr.type = st.type;
            tr.first_t = st.t;
        } else {
            if (tr.type != st.type) fail(lineno, "agent type changed mid-scene");
            if (st.t != tr.last_t() + 1)
                fail(lineno, "timesteps not contiguous for agent " + std::to_string(st.agent_id));
        }
        tr.states.push_back(st);
    }

    for (auto& [key, tr] : tracks) scenes[key.first].tracks.push_back(std::move(tr));
    for (auto& [id, scene] : scenes) ds.scenes.push_back(std::move(scene));
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path, const std::string& runconfig_hash) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw InputError("cannot open dataset for writing: " + path);
    os << dataset_to_string(ds, runconfig_hash);
    if (!os) throw InputError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open dataset: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return dataset_from_string(ss.str());
}

}  // namespace trajcast::io
