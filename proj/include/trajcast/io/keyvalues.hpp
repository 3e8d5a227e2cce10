#pragma once

#include <string>
#include <vector>

#include "trajcast/core/types.hpp"

namespace trajcast::io {

// Line-oriented "key = value" configuration text. '#' starts a comment,
// blank lines are ignored, keys are unique. Parsing failures carry line
// numbers. Serialization preserves insertion order so a round-trip is
// byte-stable.
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load_file(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set_str(const std::string& key, const std::string& v);
    void set_num(const std::string& key, double v);
    void set_int(const std::string& key, int v);
    void set_bool(const std::string& key, bool v);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace trajcast::io
