#include "trajcast/io/keyvalues.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace trajcast::io {

namespace {
std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw InputError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.has(key))
            throw InputError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv.entries_.emplace_back(key, val);
    }
    return kv;
}

KeyValues KeyValues::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::string KeyValues::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

const std::string* KeyValues::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

bool KeyValues::has(const std::string& key) const { return find(key) != nullptr; }

std::string KeyValues::get_str(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v != nullptr ? *v : fallback;
}

double KeyValues::get_num(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (v == nullptr) return fallback;
    try {
        size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw InputError("config key '" + key + "': not a number: '" + *v + "'");
    }
}

int KeyValues::get_int(const std::string& key, int fallback) const {
    const auto* v = find(key);
    if (v == nullptr) return fallback;
    try {
        size_t used = 0;
        const int i = std::stoi(*v, &used);
        if (used != v->size()) throw std::invalid_argument("");
        return i;
    } catch (...) {
        throw InputError("config key '" + key + "': not an integer: '" + *v + "'");
    }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (v == nullptr) return fallback;
    if (*v == "true" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "off") return false;
    throw InputError("config key '" + key + "': not a boolean: '" + *v + "'");
}

void KeyValues::set_str(const std::string& key, const std::string& v) {
    for (auto& [k, old] : entries_) {
        if (k == key) {
            old = v;
            return;
        }
    }
    entries_.emplace_back(key, v);
}

void KeyValues::set_num(const std::string& key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    set_str(key, buf);
}

void KeyValues::set_int(const std::string& key, int v) { set_str(key, std::to_string(v)); }
void KeyValues::set_bool(const std::string& key, bool v) { set_str(key, v ? "true" : "false"); }

}  // namespace trajcast::io
