#include "trajcast/diff/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "trajcast/core/types.hpp"

namespace trajcast::diff {

namespace {

constexpr char kMagic[4] = {'T', 'J', 'C', 'P'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

void write_f64(std::ostream& os, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    write_le<uint64_t>(os, bits);
}

double read_f64(std::istream& is) {
    const uint64_t bits = read_le<uint64_t>(is);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

}  // namespace

void Checkpoint::store_params(const ParamStore& ps) {
    for (const auto& p : ps) tensors[p->name] = Tensor{p->shape, p->value};
}

void Checkpoint::load_params(ParamStore& ps) const {
    for (auto& p : ps) {
        auto it = tensors.find(p->name);
        if (it == tensors.end())
            throw InputError("checkpoint missing parameter '" + p->name + "'");
        if (!(it->second.shape == p->shape))
            throw InputError("checkpoint shape mismatch for '" + p->name + "': file has " +
                             std::to_string(it->second.shape.rows) + "x" +
                             std::to_string(it->second.shape.cols) + ", model expects " +
                             std::to_string(p->shape.rows) + "x" + std::to_string(p->shape.cols));
        p->value = it->second.values;
    }
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_le<uint32_t>(os, kVersion);
    write_le<uint32_t>(os, static_cast<uint32_t>(tensors.size() + blobs.size()));
    for (const auto& [name, t] : tensors) {
        write_le<uint8_t>(os, 0);
        write_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<uint32_t>(os, static_cast<uint32_t>(t.shape.rows));
        write_le<uint32_t>(os, static_cast<uint32_t>(t.shape.cols));
        for (double v : t.values) write_f64(os, v);
    }
    for (const auto& [name, b] : blobs) {
        write_le<uint8_t>(os, 1);
        write_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<uint64_t>(os, b.size());
        os.write(b.data(), static_cast<std::streamsize>(b.size()));
    }
    if (!os) throw InputError("write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw InputError("not a checkpoint file: " + path);
    const auto version = read_le<uint32_t>(is);
    if (version != kVersion)
        throw InputError("unsupported checkpoint version " + std::to_string(version));
    const auto count = read_le<uint32_t>(is);
    Checkpoint ck;
    for (uint32_t e = 0; e < count; ++e) {
        const auto kind = read_le<uint8_t>(is);
        const auto name_len = read_le<uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (kind == 0) {
            const auto rows = static_cast<int>(read_le<uint32_t>(is));
            const auto cols = static_cast<int>(read_le<uint32_t>(is));
            Tensor t{Shape{rows, cols}, {}};
            t.values.resize(static_cast<size_t>(rows) * static_cast<size_t>(cols));
            for (auto& v : t.values) v = read_f64(is);
            ck.tensors[name] = std::move(t);
        } else if (kind == 1) {
            const auto len = read_le<uint64_t>(is);
            std::string b(len, '\0');
            is.read(b.data(), static_cast<std::streamsize>(len));
            ck.blobs[name] = std::move(b);
        } else {
            throw InputError("corrupt checkpoint entry kind");
        }
        if (!is) throw InputError("truncated checkpoint: " + path);
    }
    return ck;
}

}  // namespace trajcast::diff
