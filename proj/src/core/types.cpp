#include "trajcast/core/types.hpp"

namespace trajcast {

const char* to_string(AgentType t) {
    switch (t) {
        case AgentType::pedestrian: return "pedestrian";
        case AgentType::vehicle: return "vehicle";
        case AgentType::robot: return "robot";
    }
    return "?";
}

std::optional<AgentType> agent_type_from_string(const std::string& s) {
    if (s == "pedestrian") return AgentType::pedestrian;
    if (s == "vehicle") return AgentType::vehicle;
    if (s == "robot") return AgentType::robot;
    return std::nullopt;
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

}  // namespace trajcast
