#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajcast {

// Exit-code-aligned error categories (see tools/trajcast.cpp).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Online update fed non-consecutive timesteps; the caller must re-encode
// from scratch rather than patch the stream.
struct TimestepGapError : InputError {
    using InputError::InputError;
};

using Vec2 = std::array<double, 2>;

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a[0], s * a[1]}; }
inline double norm(Vec2 a) { return std::hypot(a[0], a[1]); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

// Symmetric 2x2 covariance, packed (xx, xy, yy).
struct Cov2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    double det() const { return xx * yy - xy * xy; }
    Cov2 operator+(const Cov2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    Cov2 scaled(double s) const { return {s * xx, s * xy, s * yy}; }
    bool psd(double tol = 1e-10) const {
        return xx >= -tol && yy >= -tol && det() >= -tol * (1.0 + xx + yy);
    }
};

// wrap angle to [-pi, pi)
inline double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    return a - M_PI;
}

enum class AgentType : uint8_t { pedestrian = 0, vehicle = 1, robot = 2 };
inline constexpr int kAgentTypeCount = 3;

const char* to_string(AgentType t);
std::optional<AgentType> agent_type_from_string(const std::string& s);

struct AgentState {
    int agent_id = 0;
    AgentType type = AgentType::pedestrian;
    Vec2 pos{0.0, 0.0};
    Vec2 vel{0.0, 0.0};
    double heading = std::numeric_limits<double>::quiet_NaN();  // NaN = not present
    int t = 0;  // timestep index on the dt grid

    bool has_heading() const { return !std::isnan(heading); }
    double speed() const { return norm(vel); }
};

// One agent's states on a contiguous dt grid starting at first_t.
struct AgentTrack {
    int agent_id = 0;
    AgentType type = AgentType::pedestrian;
    int first_t = 0;
    std::vector<AgentState> states;

    int last_t() const { return first_t + static_cast<int>(states.size()) - 1; }
    bool present_at(int t) const { return t >= first_t && t <= last_t(); }
    const AgentState& at(int t) const { return states[static_cast<size_t>(t - first_t)]; }
};

struct Scene {
    int scene_id = 0;
    std::vector<AgentTrack> tracks;
    std::string label;  // scripted mode label, empty if none

    const AgentTrack* find_track(int agent_id) const {
        for (const auto& tr : tracks)
            if (tr.agent_id == agent_id) return &tr;
        return nullptr;
    }
    const AgentTrack* robot_track() const {
        for (const auto& tr : tracks)
            if (tr.type == AgentType::robot) return &tr;
        return nullptr;
    }
    int max_t() const {
        int m = 0;
        for (const auto& tr : tracks) m = std::max(m, tr.last_t());
        return m;
    }
};

struct Dataset {
    double dt = 0.1;
    std::vector<Scene> scenes;
};

// FNV-1a; used for scene-id split hashing and RunConfig hashes.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}
inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

enum class Split { train, val, test };

// Scene-hash split (70/15/15) so windows from one scene never straddle splits.
inline Split scene_split(int scene_id, uint64_t salt) {
    uint64_t key[2] = {static_cast<uint64_t>(scene_id), salt};
    const uint64_t h = fnv1a(key, sizeof(key));
    const auto bucket = static_cast<int>(h % 100);
    if (bucket < 70) return Split::train;
    if (bucket < 85) return Split::val;
    return Split::test;
}

const char* to_string(Split s);

}  // namespace trajcast
